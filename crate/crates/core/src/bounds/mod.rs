//! Right-hand sides of the tail bounds with every absolute constant exposed, and
//! fitting of the exponent constant against empirical tails.
//!
//! All evaluators work in the log domain and clamp probabilities at 1; the matrix
//! Bernstein and covariance-error bounds are not probabilities and are left unclamped.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::scalar::Real;

/// Unspecified absolute constants: exponent constant `c`, prefactor/threshold
/// constant `C`, and the Bernstein validity constant `c1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams<T: Real = f64> {
    pub c: T,
    #[serde(rename = "C")]
    pub big_c: T,
    #[serde(default = "one::<T>")]
    pub c1: T,
    /// Multiplier on a bound's stated validity threshold (1 when absent).
    #[serde(default)]
    pub validity_threshold: Option<T>,
}

fn one<T: Real>() -> T {
    T::one()
}

impl<T: Real> Default for BoundParams<T> {
    fn default() -> Self {
        BoundParams { c: T::one(), big_c: T::one(), c1: T::one(), validity_threshold: None }
    }
}

impl<T: Real> BoundParams<T> {
    pub fn with_c(c: T) -> Self {
        BoundParams { c, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero() && self.big_c > T::zero() && self.c1 > T::zero()) || !self.c.is_finite() || !self.big_c.is_finite() {
            return input("bound constants c, C, c1 must be positive and finite");
        }
        if let Some(m) = self.validity_threshold {
            if !(m > T::zero()) {
                return input("validity threshold multiplier must be positive");
            }
        }
        Ok(())
    }

    fn threshold_multiplier(&self) -> T {
        self.validity_threshold.unwrap_or_else(T::one)
    }
}

/// A bound evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue<T = f64> {
    pub value: T,
    /// Natural log of the unclamped value.
    pub log_value: T,
    pub valid: bool,
}

impl<T: Real> BoundValue<T> {
    fn probability(log_value: T, valid: bool) -> Self {
        BoundValue { value: log_value.exp().min(T::one()), log_value, valid }
    }

    fn unclamped(log_value: T, valid: bool) -> Self {
        BoundValue { value: log_value.exp(), log_value, valid }
    }
}

/// Survival curve on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve<T = f64> {
    pub t_grid: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Real> TailCurve<T> {
    pub fn new(t_grid: Vec<T>, values: Vec<T>) -> Result<Self> {
        if t_grid.is_empty() || t_grid.len() != values.len() {
            return input("tail curve needs a nonempty grid with one value per point");
        }
        if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid.iter().any(|t| !t.is_finite()) {
            return input("tail curve grid must be finite and strictly increasing");
        }
        if values.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return input("tail curve values must be probabilities");
        }
        Ok(TailCurve { t_grid, values })
    }
}

fn check_t<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return input("deviation level must be finite and nonnegative");
    }
    Ok(())
}

fn check_scales<T: Real>(scales: &[T]) -> Result<()> {
    if scales.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
        return input("scale parameters must be positive and finite");
    }
    Ok(())
}

/// `min(t²/q, t/l)`; zero at `t = 0` and an infinite `l` drops the linear branch.
fn two_regime<T: Real>(t: T, quad: T, lin: T) -> T {
    if t == T::zero() {
        return T::zero();
    }
    (t * t / quad).min(t / lin)
}

/// `2 exp(−c min(t²/(K⁴‖A‖²_HS), t/(K²‖A‖)))`.
pub fn hanson_wright_rhs<T: Real>(t: T, k: T, hs_a: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[k, hs_a, op_a])?;
    let k2 = k * k;
    let e = two_regime(t, k2 * k2 * hs_a * hs_a, k2 * op_a);
    Ok(BoundValue::probability(T::LN_2() - params.c * e, true))
}

/// `2 exp(−c min(t²/(E sup‖AX‖)², t/sup‖A‖))`.
pub fn talagrand_rhs<T: Real>(t: T, e_sup_ax: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    adamczak_rhs(t, T::one(), e_sup_ax, op_a, params)
}

/// `2 exp(−c min(t²/(K² (E sup‖AX‖)²), t/(K² sup‖A‖)))`.
pub fn adamczak_rhs<T: Real>(t: T, k: T, e_sup_ax: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[k, e_sup_ax, op_a])?;
    let k2 = k * k;
    let e = two_regime(t, k2 * e_sup_ax * e_sup_ax, k2 * op_a);
    Ok(BoundValue::probability(T::LN_2() - params.c * e, true))
}

/// `exp(−c min(t²/(M² (E sup‖AX‖)²), t/(M² sup‖A‖)))`, valid for
/// `t ≥ max(M E sup‖AX‖, M² sup‖A‖)`.
pub fn mainthm_rhs<T: Real>(t: T, m: T, e_sup_ax: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[m, e_sup_ax, op_a])?;
    let m2 = m * m;
    let e = two_regime(t, m2 * e_sup_ax * e_sup_ax, m2 * op_a);
    let threshold = params.threshold_multiplier() * (m * e_sup_ax).max(m2 * op_a);
    Ok(BoundValue::probability(-params.c * e, t >= threshold))
}

/// `exp(−c min(t²/(M²K² (E sup‖AG‖)²), t/(MK sup‖A‖)))`, valid for
/// `t ≥ max(MK E sup‖AG‖, MK sup‖A‖)`.
pub fn mainthm2_rhs<T: Real>(t: T, m: T, k: T, e_sup_ag: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[m, k, e_sup_ag, op_a])?;
    let mk = m * k;
    let e = two_regime(t, mk * mk * e_sup_ag * e_sup_ag, mk * op_a);
    let threshold = params.threshold_multiplier() * (mk * e_sup_ag).max(mk * op_a);
    Ok(BoundValue::probability(-params.c * e, t >= threshold))
}

/// `exp(−c min(t²/(L + θ), t/√θ))`; `θ = 0` leaves the Gaussian branch alone.
pub fn grad_trunc_rhs<T: Real>(t: T, l: T, theta: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[l])?;
    if !(theta >= T::zero()) || !theta.is_finite() {
        return input("theta must be finite and nonnegative");
    }
    // θ = 0 makes t/√θ infinite, so the minimum is the Gaussian branch
    let e = two_regime(t, l + theta, theta.sqrt());
    Ok(BoundValue::probability(-params.c * e, true))
}

/// Scales `(s, m)` of the sparse Bernoulli bound:
/// `s = min(√(δ ln n / |ln δ|), √δ)`, `m = min(ln n / |ln δ|, 1)`.
pub fn improved_bernoulli_scales<T: Real>(delta: T, n: T) -> Result<(T, T)> {
    if !(delta > T::zero() && delta < T::one()) {
        return input("delta must lie in (0, 1)");
    }
    if !(n > T::one()) || !n.is_finite() {
        return input("n must exceed 1");
    }
    let ratio = n.ln() / delta.ln().abs();
    Ok(((delta * ratio).sqrt().min(delta.sqrt()), ratio.min(T::one())))
}

/// `exp(−c min(t²/(s² ‖A‖²_HS), t/(m ‖A‖)))`.
pub fn improved_bernoulli_rhs<T: Real>(t: T, delta: T, n: T, hs_a: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[hs_a, op_a])?;
    let (s, m) = improved_bernoulli_scales(delta, n)?;
    let e = two_regime(t, s * s * hs_a * hs_a, m * op_a);
    Ok(BoundValue::probability(-params.c * e, true))
}

/// `exp(−C min(t²/(E sup‖Aσ‖ + sup‖A‖)², t/sup‖A‖))`.
pub fn ising_rhs<T: Real>(t: T, e_sup_a_sigma: T, op_a: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[op_a])?;
    if !(e_sup_a_sigma >= T::zero()) || !e_sup_a_sigma.is_finite() {
        return input("E sup |A sigma| must be finite and nonnegative");
    }
    let s = e_sup_a_sigma + op_a;
    let e = two_regime(t, s * s, op_a);
    Ok(BoundValue::probability(-params.big_c * e, true))
}

/// `C r̃ exp(−c min(u²/σ², u/M))`, valid for `u ≥ c1 max(M, σ)`. Not clamped.
pub fn bernstein_rhs<T: Real>(u: T, sigma2: T, m: T, eff_rank: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(u)?;
    check_scales(&[sigma2, m])?;
    if !(eff_rank >= T::one()) || !eff_rank.is_finite() {
        return input("effective rank must be at least 1");
    }
    let e = two_regime(u, sigma2, m);
    let log_value = params.big_c.ln() + eff_rank.ln() - params.c * e;
    let valid = u >= params.threshold_multiplier() * params.c1 * m.max(sigma2.sqrt());
    Ok(BoundValue::unclamped(log_value, valid))
}

/// The three terms inside the maximum of the missing-data covariance bound:
/// `√(r̃ ln r̃/(Nδ²))`, `√(t/(Nδ²))`, `r̃ (ln r̃ + t) ln N/(Nδ²)`.
pub fn missing_cov_terms<T: Real>(t: T, eff_rank: T, n_samples: T, delta: T) -> Result<[T; 3]> {
    check_t(t)?;
    if !(eff_rank >= T::one()) || !eff_rank.is_finite() {
        return input("effective rank must be at least 1");
    }
    if !(n_samples >= T::one()) || !n_samples.is_finite() {
        return input("sample size must be at least 1");
    }
    if !(delta > T::zero() && delta <= T::one()) {
        return input("delta must lie in (0, 1]");
    }
    let denom = n_samples * delta * delta;
    let lr = eff_rank.ln();
    Ok([(eff_rank * lr / denom).sqrt(), (t / denom).sqrt(), eff_rank * (lr + t) * n_samples.ln() / denom])
}

/// `C ‖Σ‖ max(...)` over [`missing_cov_terms`]. Not a probability.
pub fn missing_cov_rhs<T: Real>(
    t: T,
    norm_sigma: T,
    eff_rank: T,
    n_samples: T,
    delta: T,
    params: &BoundParams<T>,
) -> Result<BoundValue<T>> {
    params.validate()?;
    check_scales(&[norm_sigma])?;
    let terms = missing_cov_terms(t, eff_rank, n_samples, delta)?;
    let top = terms.iter().copied().fold(T::zero(), T::max);
    let value = params.big_c * norm_sigma * top;
    Ok(BoundValue { value, log_value: value.ln(), valid: true })
}

/// `exp(−t²/(4σ²)) + 3 exp(−t/(C ψ₁max))` for `P(Z ≥ 2 E Z + t)`, clamped at 1.
pub fn adam08_rhs<T: Real>(t: T, ez: T, sigma2: T, psi1_max: T, params: &BoundParams<T>) -> Result<BoundValue<T>> {
    params.validate()?;
    check_t(t)?;
    check_scales(&[sigma2, psi1_max])?;
    if !ez.is_finite() {
        return input("E Z must be finite");
    }
    let a = -t * t / (T::of(4.0) * sigma2);
    let b = T::of(3.0).ln() - t / (params.big_c * psi1_max);
    let top = a.max(b);
    let log_value = top + ((a - top).exp() + (b - top).exp()).ln();
    Ok(BoundValue::probability(log_value, true))
}

/// Outcome of [`fit_constant`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantFit {
    pub c: f64,
    /// The search cap was feasible, so `c` is only a lower bound.
    pub at_cap: bool,
    pub valid_points: usize,
}

pub const FIT_MIN: f64 = 1e-6;
pub const FIT_MAX: f64 = 1e3;

/// Largest `c ∈ (1e-6, 1e3]` with `rhs(t; c) ≥ upper(t)` at every grid point where
/// the bound is valid, by log-space bisection to relative width 1e-4. `rhs` must be
/// nonincreasing in `c`.
pub fn fit_constant<F>(upper: &TailCurve<f64>, rhs: F) -> Result<ConstantFit>
where
    F: Fn(f64, f64) -> Result<BoundValue<f64>>,
{
    let valid_points = upper.t_grid.iter().map(|&t| rhs(t, 1.0).map(|b| b.valid)).collect::<Result<Vec<_>>>()?;
    let count = valid_points.iter().filter(|v| **v).count();
    if count == 0 {
        return Err(Error::FitFailure("no grid point lies in the validity region".into()));
    }
    let feasible = |c: f64| -> Result<bool> {
        for ((&t, &u), &ok) in upper.t_grid.iter().zip(&upper.values).zip(&valid_points) {
            if ok && rhs(t, c)?.value < u {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if feasible(FIT_MAX)? {
        return Ok(ConstantFit { c: FIT_MAX, at_cap: true, valid_points: count });
    }
    if !feasible(FIT_MIN)? {
        return Err(Error::FitFailure(format!("bound stays below the empirical tail for every c >= {FIT_MIN}")));
    }
    let (mut lo, mut hi) = (FIT_MIN, FIT_MAX);
    while hi / lo - 1.0 > 1e-4 {
        let mid = (lo * hi).sqrt();
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ConstantFit { c: lo, at_cap: false, valid_points: count })
}

/// Bound curve as CSV with columns `t,rhs,valid`.
pub fn curve_csv<T: Real>(t_grid: &[T], values: &[BoundValue<T>]) -> String {
    let mut out = String::from("t,rhs,valid\n");
    for (t, v) in t_grid.iter().zip(values) {
        out.push_str(&format!("{t},{},{}\n", v.value, v.valid));
    }
    out
}

#[cfg(test)]
mod tests;

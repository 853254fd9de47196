//! Coordinate laws for the random vector `X`, product sampling, exact support
//! enumeration, Orlicz (ψ_α) norms, and the closed-form analytics of the two-point
//! counterexample law.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, input, Error, Result};
use crate::montecarlo::Z95;

/// Largest product support [`ProductDistribution::enumerate_support`] will expand.
pub const MAX_ATOMS: u64 = 1 << 20;

/// Law of a single coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoordinateLaw {
    Rademacher,
    StandardGaussian,
    /// `δ_i - δ` with `δ_i ~ Bernoulli(δ)`.
    CenteredBernoulli { delta: f64 },
    /// Symmetric, `P(|X| = 1) = 1 - e^{-r}`, `P(|X| = √r) = e^{-r}`.
    TwoPointSymmetric { r: f64 },
    /// `(value, probability)` pairs.
    FiniteSupport { atoms: Vec<(f64, f64)> },
}

impl CoordinateLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CoordinateLaw::Rademacher | CoordinateLaw::StandardGaussian => Ok(()),
            CoordinateLaw::CenteredBernoulli { delta } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return input(format!("centered Bernoulli needs delta in (0, 1), got {delta}"));
                }
                Ok(())
            }
            CoordinateLaw::TwoPointSymmetric { r } => {
                if !(r.is_finite() && *r >= 4.0) {
                    return input(format!("two-point law needs r >= 4, got {r}"));
                }
                Ok(())
            }
            CoordinateLaw::FiniteSupport { atoms } => {
                if atoms.is_empty() {
                    return input("finite-support law needs at least one atom");
                }
                if atoms.iter().any(|&(v, p)| !v.is_finite() || !(p > 0.0) || !p.is_finite()) {
                    return input("finite-support atoms need finite values and positive probabilities");
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return input(format!("finite-support probabilities sum to {total}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// Atoms for finite-support laws, `None` for the Gaussian.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            CoordinateLaw::Rademacher => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            CoordinateLaw::StandardGaussian => None,
            CoordinateLaw::CenteredBernoulli { delta } => Some(vec![(-delta, 1.0 - delta), (1.0 - delta, *delta)]),
            CoordinateLaw::TwoPointSymmetric { r } => {
                let p = (-r).exp();
                let big = r.sqrt();
                Some(vec![(-big, p / 2.0), (-1.0, (1.0 - p) / 2.0), (1.0, (1.0 - p) / 2.0), (big, p / 2.0)])
            }
            CoordinateLaw::FiniteSupport { atoms } => Some(atoms.clone()),
        }
    }

    pub fn has_finite_support(&self) -> bool {
        !matches!(self, CoordinateLaw::StandardGaussian)
    }

    pub fn mean(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|&(v, p)| v * p).sum(),
            None => 0.0,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|&(v, p)| v * v * p).sum(),
            None => 1.0,
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// `E|X|`.
    pub fn abs_mean(&self) -> f64 {
        match self.atoms() {
            Some(atoms) => atoms.iter().map(|&(v, p)| v.abs() * p).sum(),
            None => (2.0 / std::f64::consts::PI).sqrt(),
        }
    }

    /// Distribution symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        match self.atoms() {
            None => true,
            Some(atoms) => atoms.iter().all(|&(v, p)| {
                let mirrored: f64 = atoms.iter().filter(|a| (a.0 + v).abs() <= 1e-12 * (1.0 + v.abs())).map(|a| a.1).sum();
                let here: f64 = atoms.iter().filter(|a| (a.0 - v).abs() <= 1e-12 * (1.0 + v.abs())).map(|a| a.1).sum();
                (mirrored - here).abs() <= 1e-12 && p > 0.0
            }),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CoordinateLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoordinateLaw::StandardGaussian => rng.sample(StandardNormal),
            CoordinateLaw::CenteredBernoulli { delta } => {
                let hit = rng.random::<f64>() < *delta;
                if hit {
                    1.0 - delta
                } else {
                    -delta
                }
            }
            CoordinateLaw::TwoPointSymmetric { r } => {
                let magnitude = if rng.random::<f64>() < (-r).exp() { r.sqrt() } else { 1.0 };
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            CoordinateLaw::FiniteSupport { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }

    /// Multiplies every value of the law by `c` (finite-support result).
    pub fn scaled(&self, c: f64) -> Option<CoordinateLaw> {
        self.atoms().map(|atoms| CoordinateLaw::FiniteSupport { atoms: atoms.into_iter().map(|(v, p)| (c * v, p)).collect() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Laws {
    Iid(CoordinateLaw),
    Independent(Vec<CoordinateLaw>),
}

/// Vector with independent coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    n: usize,
    laws: Laws,
}

impl ProductDistribution {
    pub fn iid(n: usize, law: CoordinateLaw) -> Result<Self> {
        if n == 0 {
            return input("product distribution needs n >= 1");
        }
        law.validate()?;
        Ok(ProductDistribution { n, laws: Laws::Iid(law) })
    }

    pub fn independent(laws: Vec<CoordinateLaw>) -> Result<Self> {
        if laws.is_empty() {
            return input("product distribution needs n >= 1");
        }
        for law in &laws {
            law.validate()?;
        }
        Ok(ProductDistribution { n: laws.len(), laws: Laws::Independent(laws) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn law(&self, i: usize) -> &CoordinateLaw {
        match &self.laws {
            Laws::Iid(law) => law,
            Laws::Independent(laws) => &laws[i],
        }
    }

    pub fn laws(&self) -> &Laws {
        &self.laws
    }

    pub fn finite_support(&self) -> bool {
        (0..self.n).all(|i| self.law(i).has_finite_support())
    }

    /// Product of per-coordinate atom counts, saturating; `None` for infinite support.
    pub fn atom_count(&self) -> Option<u64> {
        let mut total: u64 = 1;
        for i in 0..self.n {
            let k = self.law(i).atoms()?.len() as u64;
            total = total.saturating_mul(k);
        }
        Some(total)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n).map(|i| self.law(i).sample(rng)).collect()
    }

    pub fn is_centered(&self) -> bool {
        (0..self.n).all(|i| self.law(i).mean().abs() <= 1e-12)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.law(i).is_symmetric())
    }

    fn coordinate_atoms(&self) -> Result<Vec<Vec<(f64, f64)>>> {
        let count = match self.atom_count() {
            None => return capacity("distribution has infinite support"),
            Some(c) => c,
        };
        if count > MAX_ATOMS {
            return capacity(format!("support has {count} atoms, above the cap of {MAX_ATOMS}"));
        }
        Ok((0..self.n).map(|i| self.law(i).atoms().expect("finite support checked")).collect())
    }

    /// Visits every atom `(x, P(X = x))` of the product support in a fixed order
    /// (coordinate 0 varies fastest).
    pub fn for_each_atom(&self, mut visit: impl FnMut(&[f64], f64)) -> Result<()> {
        let per = self.coordinate_atoms()?;
        let mut digits = vec![0usize; self.n];
        let mut x: Vec<f64> = per.iter().map(|a| a[0].0).collect();
        loop {
            let p: f64 = per.iter().zip(&digits).map(|(a, &d)| a[d].1).product();
            visit(&x, p);
            let mut i = 0;
            loop {
                if i == self.n {
                    return Ok(());
                }
                digits[i] += 1;
                if digits[i] < per[i].len() {
                    x[i] = per[i][digits[i]].0;
                    break;
                }
                digits[i] = 0;
                x[i] = per[i][0].0;
                i += 1;
            }
        }
    }

    /// Exhaustive list of atoms with their probabilities.
    pub fn enumerate_support(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        let mut out = Vec::new();
        self.for_each_atom(|x, p| out.push((x.to_vec(), p)))?;
        Ok(out)
    }
}

/// ψ_α norm `inf{t > 0 : E exp(|Y|^α / t^α) ≤ 2}`.
///
/// Exact for finite support, closed form for the Gaussian at `α = 2`, and by
/// deterministic quadrature for the Gaussian at `1 ≤ α < 2`.
pub fn psi_alpha_norm(law: &CoordinateLaw, alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return input(format!("psi_alpha needs alpha >= 1, got {alpha}"));
    }
    law.validate()?;
    match law.atoms() {
        Some(atoms) => {
            let scale = atoms.iter().fold(0.0f64, |m, a| m.max(a.0.abs()));
            if scale == 0.0 {
                return Ok(0.0);
            }
            solve_orlicz(|t| finite_orlicz_moment(&atoms, alpha, t), scale)
        }
        None => {
            if alpha > 2.0 {
                return domain("Gaussian has E exp(|g|^alpha / t^alpha) = inf for every t when alpha > 2");
            }
            if alpha == 2.0 {
                // E exp(g²/t²) = (1 - 2/t²)^{-1/2} = 2  ⇔  t² = 8/3
                return Ok((8.0f64 / 3.0).sqrt());
            }
            solve_orlicz(|t| gaussian_orlicz_moment(alpha, t), 1.0)
        }
    }
}

fn finite_orlicz_moment(atoms: &[(f64, f64)], alpha: f64, t: f64) -> f64 {
    atoms.iter().map(|&(v, p)| p * (v.abs() / t).powf(alpha).exp()).sum()
}

/// `E exp(|g|^α / t^α)` for standard Gaussian `g`, `1 ≤ α < 2`.
fn gaussian_orlicz_moment(alpha: f64, t: f64) -> f64 {
    let ta = t.powf(alpha);
    let log_f = |x: f64| x.powf(alpha) / ta - 0.5 * x * x;
    // stationary point of log_f
    let peak = (alpha / ta).powf(1.0 / (2.0 - alpha));
    let top = log_f(peak).max(0.0);
    if top > 700.0 {
        return f64::INFINITY;
    }
    let mut upper = peak.max(1.0);
    while log_f(upper) > top - 60.0 {
        upper *= 1.5;
    }
    let norm = (2.0 / std::f64::consts::PI).sqrt();
    let integrand = |x: f64| norm * (log_f(x) - top).exp();
    adaptive_simpson(&integrand, 0.0, upper, 1e-13, 40) * top.exp()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // split into panels so the recursion sees the bulk of the mass
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            recurse(f, lo, hi, flo, fmid, fhi, simpson(flo, fmid, fhi, lo, hi), tol / panels as f64, depth)
        })
        .sum()
}

/// Solves `moment(t) = 2` for a moment function decreasing in `t`.
fn solve_orlicz(moment: impl Fn(f64) -> f64, scale: f64) -> Result<f64> {
    let mut lo = 1e-12;
    let mut hi = scale.max(1.0) * 64.0;
    let mut doublings = 0;
    while !(moment(hi) <= 2.0) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return domain("Orlicz moment stays above 2 on the whole search grid");
        }
    }
    if moment(lo) <= 2.0 {
        return Ok(lo);
    }
    for _ in 0..400 {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if moment(mid) <= 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-13 * hi {
            break;
        }
    }
    Ok(hi)
}

/// ψ_α estimate from an empirical sample, with a 95% bracket from the CLT band of
/// the empirical Orlicz moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiBracket {
    pub point: f64,
    pub low: f64,
    pub high: f64,
}

pub fn psi_alpha_empirical(samples: &[f64], alpha: f64) -> Result<PsiBracket> {
    if !(alpha >= 1.0) {
        return input(format!("psi_alpha needs alpha >= 1, got {alpha}"));
    }
    if samples.len() < 2 {
        return input("empirical psi_alpha needs at least two samples");
    }
    let scale = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Ok(PsiBracket { point: 0.0, low: 0.0, high: 0.0 });
    }
    let band = |t: f64, sign: f64| {
        let vals: Vec<f64> = samples.iter().map(|x| (x.abs() / t).powf(alpha).exp()).collect();
        let (m, se) = crate::montecarlo::mean_stderr(&vals);
        if !m.is_finite() {
            return f64::INFINITY;
        }
        m + sign * Z95 * se
    };
    Ok(PsiBracket {
        point: solve_orlicz(|t| band(t, 0.0), scale)?,
        low: solve_orlicz(|t| band(t, -1.0), scale)?,
        high: solve_orlicz(|t| band(t, 1.0), scale)?,
    })
}

/// `‖δ_1 − δ‖²_{ψ₂}` up to absolute constants: `(1 − 2δ) / (4 ln((1 − δ)/δ))`.
pub fn bernoulli_psi2_squared(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.25) {
        return input(format!("bernoulli_psi2_squared needs delta in (0, 1/4], got {delta}"));
    }
    Ok((1.0 - 2.0 * delta) / (4.0 * ((1.0 - delta) / delta).ln()))
}

/// `(E max_i X_i², ‖max_i X_i²‖_{L2})` for `n` iid two-point variables with parameter `r`.
pub fn counterexample_max_moments(r: f64, n: usize) -> Result<(f64, f64)> {
    if !(r >= 4.0) || n == 0 {
        return input("counterexample_max_moments needs r >= 4 and n >= 1");
    }
    let p = (-r).exp();
    // P(no coordinate hits √r)
    let q = (n as f64 * (-p).ln_1p()).exp();
    let l1 = r * (1.0 - q) + q;
    let l2 = (r * r * (1.0 - q) + q).sqrt();
    Ok((l1, l2))
}

/// Searches for `t ≥ E|X|` with `P(X² > A t) > P(X² > t) / A` on a finite-support
/// law; returns a witness `t` when the tail-regularity condition is broken.
pub fn tail_regularity_witness(law: &CoordinateLaw, a: f64) -> Result<Option<f64>> {
    if !(a > 1.0) {
        return input(format!("tail regularity needs A > 1, got {a}"));
    }
    law.validate()?;
    let Some(atoms) = law.atoms() else {
        return Err(Error::Capacity("tail regularity scan needs a finite-support law".into()));
    };
    let t0 = law.abs_mean();
    let survival = |s: f64| -> f64 { atoms.iter().filter(|&&(v, _)| v * v > s).map(|a| a.1).sum() };
    // S(t) and S(At) are piecewise constant between these breakpoints.
    let mut cuts: Vec<f64> = atoms
        .iter()
        .flat_map(|&(v, _)| [v * v, v * v / a])
        .chain(std::iter::once(t0))
        .filter(|&c| c >= t0)
        .collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut probes: Vec<f64> = vec![t0];
    probes.extend(cuts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    probes.push(cuts.last().copied().unwrap_or(t0) * 2.0 + 1.0);
    Ok(probes.into_iter().find(|&t| survival(a * t) > survival(t) / a))
}

/// Tail-regularity check on the two-point law with parameter `r`.
pub fn tail_regularity_violation(r: f64, a: f64) -> Result<bool> {
    Ok(tail_regularity_witness(&CoordinateLaw::TwoPointSymmetric { r }, a)?.is_some())
}

#[cfg(test)]
mod tests;

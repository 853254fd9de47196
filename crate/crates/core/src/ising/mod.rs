//! Ising model `π(σ) ∝ exp(σᵀJσ − hᵀσ)` on `{−1, 1}^n`: Dobrushin diagnostics, exact
//! enumeration, heat-bath sampling, the difference operator, and concentration of
//! chaos suprema.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{fit_constant, ising_rhs, BoundParams, BoundValue, ConstantFit, TailCurve};
use crate::chaos::entropy_of_exp;
use crate::error::{capacity, input, Result};
use crate::montecarlo::{check_grid, replicate_with, RngStream, TailEstimate};
use crate::numeric::Kahan;
use crate::{MatrixFamily, SymMatrix};

/// Largest `n` for [`exact_distribution`].
pub const MAX_EXACT_DIM: usize = 15;
/// Largest `n` for [`log_sobolev_fit`].
pub const MAX_LOG_SOBOLEV_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    j: SymMatrix,
    h: Vec<f64>,
}

/// JSON fixture `{n, J, h}` with `J` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingFixture {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    pub h: Vec<f64>,
}

impl IsingModel {
    pub fn new(j: SymMatrix, h: Vec<f64>) -> Result<Self> {
        let n = j.dim();
        if n == 0 {
            return input("Ising model needs at least one site");
        }
        if (0..n).any(|i| j.get(i, i) != 0.0) {
            return input("interaction matrix must have an exactly zero diagonal");
        }
        if h.len() != n {
            return input(format!("field has length {}, expected {n}", h.len()));
        }
        if j.as_slice().iter().chain(&h).any(|v| !v.is_finite()) {
            return input("model parameters must be finite");
        }
        Ok(IsingModel { j, h })
    }

    pub fn from_fixture(f: &IsingFixture) -> Result<Self> {
        if f.j.len() != f.n * f.n {
            return input(format!("J has {} entries, expected {}", f.j.len(), f.n * f.n));
        }
        Self::new(SymMatrix::from_row_major(f.n, f.j.clone())?, f.h.clone())
    }

    pub fn to_fixture(&self) -> IsingFixture {
        IsingFixture { n: self.n(), j: self.j.as_slice().to_vec(), h: self.h.clone() }
    }

    /// Equal ferromagnetic couplings with row sum `1 − ρ` and a constant field.
    pub fn curie_weiss(n: usize, rho: f64, field: f64) -> Result<Self> {
        if n < 2 || !(0.0..=1.0).contains(&rho) {
            return input("curie_weiss needs n >= 2 and rho in [0, 1]");
        }
        let c = (1.0 - rho) / (n - 1) as f64;
        Self::new(SymMatrix::from_upper_fn(n, |i, j| if i == j { 0.0 } else { c }), vec![field; n])
    }

    /// Random signed couplings scaled to `‖J‖_{1→1} = 1 − ρ`, field uniform on `[−α, α]`.
    pub fn random_dobrushin<R: Rng + ?Sized>(n: usize, rho: f64, alpha: f64, rng: &mut R) -> Result<Self> {
        if n < 2 || !(0.0..1.0).contains(&rho) || !(alpha >= 0.0) {
            return input("random_dobrushin needs n >= 2, rho in [0, 1) and alpha >= 0");
        }
        let raw = SymMatrix::from_upper_fn(n, |i, j| if i == j { 0.0 } else { rng.random_range(-1.0..1.0) });
        let j = raw.scale((1.0 - rho) / raw.max_row_abs_sum());
        let h = (0..n).map(|_| if alpha > 0.0 { rng.random_range(-alpha..=alpha) } else { 0.0 }).collect();
        Self::new(j, h)
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn j(&self) -> &SymMatrix {
        &self.j
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `σᵀJσ − hᵀσ`.
    pub fn log_weight(&self, sigma: &[f64]) -> f64 {
        self.j.quad_form(sigma) - self.h.iter().zip(sigma).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `m_i = 2 Σ_{j≠i} J_ij σ_j − h_i`, so that `P(σ_i = s | rest) ∝ exp(s m_i)`.
    fn local_field(&self, sigma: &[f64], i: usize) -> f64 {
        2.0 * self.j.row(i).iter().zip(sigma).map(|(a, b)| a * b).sum::<f64>() - self.h[i]
    }

    fn plus_prob(&self, sigma: &[f64], i: usize) -> f64 {
        1.0 / (1.0 + (-2.0 * self.local_field(sigma, i)).exp())
    }

    /// Permutes the site labels: site `k` of the result is site `perm[k]` of `self`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return input("relabel needs a permutation of the sites");
        }
        let j = SymMatrix::from_upper_fn(n, |a, b| self.j.get(perm[a], perm[b]));
        Self::new(j, perm.iter().map(|&p| self.h[p]).collect())
    }
}

fn check_spins(model: &IsingModel, sigma: &[f64]) -> Result<()> {
    if sigma.len() != model.n() || sigma.iter().any(|s| *s != 1.0 && *s != -1.0) {
        return input("spin vector must have the model dimension and entries ±1");
    }
    Ok(())
}

/// Spin configuration of state index `k`: bit `i` set means `σ_i = +1`.
pub fn spins_of(k: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if k >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()
}

/// Inverse of [`spins_of`].
pub fn index_of(sigma: &[f64]) -> usize {
    sigma.iter().enumerate().filter(|(_, s)| **s > 0.0).map(|(i, _)| 1 << i).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DobrushinReport {
    pub one_to_one_norm: f64,
    pub rho: f64,
    pub h_inf: f64,
    pub satisfied: bool,
}

const DOBRUSHIN_SLACK: f64 = 1e-12;

pub fn dobrushin_check(model: &IsingModel, rho: f64) -> Result<DobrushinReport> {
    if (0..model.n()).any(|i| model.j.get(i, i) != 0.0) {
        return input("interaction matrix must have an exactly zero diagonal");
    }
    let norm = model.j.max_row_abs_sum();
    let h_inf = model.h.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(DobrushinReport { one_to_one_norm: norm, rho, h_inf, satisfied: norm <= 1.0 - rho + DOBRUSHIN_SLACK })
}

/// `P(σ_i = +1 | σ_j, j ≠ i)`.
pub fn conditional_plus_prob(model: &IsingModel, sigma: &[f64], i: usize) -> Result<f64> {
    check_spins(model, sigma)?;
    if i >= model.n() {
        return input(format!("site {i} out of range for n = {}", model.n()));
    }
    Ok(model.plus_prob(sigma, i))
}

/// `π` on all `2^n` states, indexed as in [`spins_of`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    n: usize,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl ExactDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, sigma: &[f64]) -> f64 {
        self.probs[index_of(sigma)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(k, &p)| (spins_of(k, self.n), p))
    }

    /// State index drawn by inverting the CDF.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.probs.len() - 1)
    }

    /// `E f(σ)` for `f` tabulated over states.
    pub fn expect(&self, table: &[f64]) -> f64 {
        self.probs.iter().zip(table).map(|(p, v)| p * v).collect::<Kahan>().value()
    }

    /// Total variation distance to an empirical histogram of state indices.
    pub fn tv_to_counts(&self, counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        0.5 * self.probs.iter().zip(counts).map(|(p, &c)| (p - c as f64 / total as f64).abs()).sum::<f64>()
    }
}

pub fn exact_distribution(model: &IsingModel) -> Result<ExactDistribution> {
    let n = model.n();
    if n > MAX_EXACT_DIM {
        return capacity(format!("exact enumeration needs n <= {MAX_EXACT_DIM}, got {n}"));
    }
    let logw: Vec<f64> = (0..1usize << n).map(|k| model.log_weight(&spins_of(k, n))).collect();
    let m = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().copied().collect::<Kahan>().value();
    let probs: Vec<f64> = w.iter().map(|v| v / z).collect();
    let mut acc = Kahan::new();
    let cdf = probs
        .iter()
        .map(|p| {
            acc.add(*p);
            acc.value()
        })
        .collect();
    Ok(ExactDistribution { n, probs, cdf })
}

/// Heat-bath update of site `i` driven by the uniform `u`.
pub fn heat_bath_update(model: &IsingModel, sigma: &mut [f64], i: usize, u: f64) {
    sigma[i] = if u < model.plus_prob(sigma, i) { 1.0 } else { -1.0 };
}

/// Applies the heat-bath kernel of site `i` to a distribution over states.
pub fn heat_bath_transition(model: &IsingModel, probs: &[f64], i: usize) -> Result<Vec<f64>> {
    let n = model.n();
    if probs.len() != 1 << n || i >= n {
        return input("distribution must cover all 2^n states and the site must exist");
    }
    let mut out = vec![0.0; probs.len()];
    for (k, &p) in probs.iter().enumerate() {
        let sigma = spins_of(k, n);
        let q = model.plus_prob(&sigma, i);
        out[k | 1 << i] += p * q;
        out[k & !(1 << i)] += p * (1.0 - q);
    }
    Ok(out)
}

/// One systematic-scan sweep `P_1 P_2 ⋯ P_n` applied to a distribution.
pub fn sweep_transition(model: &IsingModel, probs: &[f64]) -> Result<Vec<f64>> {
    let mut cur = probs.to_vec();
    for i in 0..model.n() {
        cur = heat_bath_transition(model, &cur, i)?;
    }
    Ok(cur)
}

/// Systematic-scan heat-bath chain started from all `+1`. `burn_in` and `thin` count
/// full sweeps; `count` samples are returned.
pub fn glauber_sample(model: &IsingModel, burn_in: usize, thin: usize, count: usize, rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
    let n = model.n();
    let min_burn = (10.0 * n as f64 * (n as f64 + 1.0).ln()).ceil() as usize;
    if burn_in < min_burn || thin == 0 {
        return input(format!("burn-in must be at least {min_burn} sweeps and thin at least 1"));
    }
    if model.j.max_row_abs_sum() >= 1.0 {
        log::warn!("interaction matrix violates Dobrushin's condition; mixing is not guaranteed");
    }
    let mut sigma = vec![1.0; n];
    let mut sweep = |sigma: &mut [f64]| {
        for i in 0..n {
            let u: f64 = rng.random();
            heat_bath_update(model, sigma, i, u);
        }
    };
    for _ in 0..burn_in {
        sweep(&mut sigma);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..thin {
            sweep(&mut sigma);
        }
        out.push(sigma.clone());
    }
    Ok(out)
}

/// `|𝔡f|²(σ) = ½ Σ_i (f(σ) − f(T_iσ))² π(−σ_i | rest)`.
pub fn difference_operator_sq<F: Fn(&[f64]) -> f64>(model: &IsingModel, f: F, sigma: &[f64]) -> Result<f64> {
    check_spins(model, sigma)?;
    if model.n() > MAX_EXACT_DIM {
        return capacity(format!("difference operator needs n <= {MAX_EXACT_DIM}"));
    }
    let fs = f(sigma);
    let mut flipped = sigma.to_vec();
    let mut acc = 0.0;
    for i in 0..model.n() {
        let plus = model.plus_prob(sigma, i);
        let p_flip = if sigma[i] > 0.0 { 1.0 - plus } else { plus };
        flipped[i] = -sigma[i];
        let d = fs - f(&flipped);
        flipped[i] = sigma[i];
        acc += d * d * p_flip;
    }
    Ok(0.5 * acc)
}

/// `f` evaluated on every state.
pub fn tabulate<F: Fn(&[f64]) -> f64>(n: usize, f: F) -> Vec<f64> {
    (0..1usize << n).map(|k| f(&spins_of(k, n))).collect()
}

/// `E |𝔡f|²` for tabulated `f`.
pub fn expected_difference_sq(model: &IsingModel, dist: &ExactDistribution, table: &[f64]) -> f64 {
    let n = model.n();
    let mut acc = Kahan::new();
    for (k, &p) in dist.probs.iter().enumerate() {
        let sigma = spins_of(k, n);
        let mut s = 0.0;
        for i in 0..n {
            let plus = model.plus_prob(&sigma, i);
            let p_flip = if sigma[i] > 0.0 { 1.0 - plus } else { plus };
            let d = table[k] - table[k ^ 1 << i];
            s += d * d * p_flip;
        }
        acc.add(0.5 * p * s);
    }
    acc.value()
}

/// `Σ_i E (f(σ) − f(σ'_{(i)}))₊²` with `σ'_i` resampled from its conditional.
pub fn expected_resampling_sq(model: &IsingModel, dist: &ExactDistribution, table: &[f64]) -> f64 {
    let n = model.n();
    let mut acc = Kahan::new();
    for (k, &p) in dist.probs.iter().enumerate() {
        let sigma = spins_of(k, n);
        for i in 0..n {
            let plus = model.plus_prob(&sigma, i);
            for (bit, q) in [(1usize, plus), (0usize, 1.0 - plus)] {
                let other = (k & !(1 << i)) | bit << i;
                let d = (table[k] - table[other]).max(0.0);
                acc.add(p * q * d * d);
            }
        }
    }
    acc.value()
}

/// Largest ratio `Ent(f²) / (2 E|𝔡f|²)` over `f = exp(λ g / 2)` for `g` in the family
/// and `λ` in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSobolevFit {
    pub c: f64,
    /// Pairs skipped because `E|𝔡f|²` vanishes (constant `f`).
    pub skipped: usize,
    pub evaluated: usize,
}

pub fn log_sobolev_fit(model: &IsingModel, family: &[Vec<f64>], lambda_grid: &[f64]) -> Result<LogSobolevFit> {
    let n = model.n();
    if n > MAX_LOG_SOBOLEV_DIM {
        return capacity(format!("log-Sobolev fit needs n <= {MAX_LOG_SOBOLEV_DIM}, got {n}"));
    }
    if family.iter().any(|g| g.len() != 1 << n) {
        return input("each function must be tabulated on all 2^n states");
    }
    let dist = exact_distribution(model)?;
    let mut fit = LogSobolevFit { c: 0.0, skipped: 0, evaluated: 0 };
    for g in family {
        for &lambda in lambda_grid {
            let f: Vec<f64> = g.iter().map(|v| (0.5 * lambda * v).exp()).collect();
            let energy = expected_difference_sq(model, &dist, &f);
            let scale = f.iter().fold(0.0, |m: f64, v| m.max(v * v));
            if energy <= 1e-14 * scale {
                fit.skipped += 1;
                continue;
            }
            let ent = entropy_of_exp(g, &dist.probs, lambda)?;
            fit.c = fit.c.max(ent / (2.0 * energy));
            fit.evaluated += 1;
        }
    }
    Ok(fit)
}

/// How configurations are drawn in [`ising_chaos_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsingSampler {
    /// Independent draws from the enumerated distribution.
    Exact,
    /// `chains` independent heat-bath chains sharing the replicate budget.
    Glauber { burn_in: usize, thin: usize, chains: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingChaosReport {
    pub n: usize,
    pub sampler: IsingSampler,
    pub dobrushin_norm: f64,
    pub h_inf: f64,
    /// `E sup_A σᵀAσ` (exact under enumeration, otherwise the sample mean).
    pub mean_z: f64,
    /// `E sup_A ‖Aσ‖`, estimated from the same sample.
    pub e_sup_a_sigma: f64,
    pub sup_op: f64,
    pub tail: TailEstimate,
    pub bound: Vec<BoundValue<f64>>,
    pub fit: Option<ConstantFit>,
    pub fit_error: Option<String>,
}

fn sup_quad(family: &MatrixFamily, sigma: &[f64]) -> f64 {
    family.iter().map(|a| a.quad_form(sigma)).fold(f64::NEG_INFINITY, f64::max)
}

fn sup_norm(family: &MatrixFamily, sigma: &[f64]) -> f64 {
    family.iter().map(|a| a.matvec(sigma).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// Tail of `sup_A σᵀAσ − E sup_A σᵀAσ` against the Ising chaos bound; `C` is fitted
/// with the exponent scale `params.big_c`.
pub fn ising_chaos_experiment(
    model: &IsingModel,
    family: &MatrixFamily,
    t_grid: &[f64],
    reps: usize,
    sampler: IsingSampler,
    rng: &RngStream,
) -> Result<IsingChaosReport> {
    let n = model.n();
    if family.dim() != n {
        return input("family dimension must match the model");
    }
    if family.iter().any(|a| (0..n).any(|i| a.get(i, i) != 0.0)) {
        return input("family members must have zero diagonal");
    }
    check_grid(t_grid)?;
    if t_grid[0] < 0.0 {
        return input("t grid must be nonnegative");
    }
    if reps < 1000 {
        return input("ising_chaos_experiment needs at least 1000 replicates");
    }
    let states: Vec<Vec<f64>> = match sampler {
        IsingSampler::Exact => {
            let dist = exact_distribution(model)?;
            replicate_with(reps, rng, |s| spins_of(dist.sample_index(s), n))
        }
        IsingSampler::Glauber { burn_in, thin, chains } => {
            if chains == 0 {
                return input("at least one chain is required");
            }
            let per = reps.div_ceil(chains);
            let runs = replicate_with(chains, rng, |s| glauber_sample(model, burn_in, thin, per, s));
            let mut out = Vec::with_capacity(per * chains);
            for r in runs {
                out.extend(r?);
            }
            out.truncate(reps);
            out
        }
    };
    let z: Vec<f64> = states.iter().map(|s| sup_quad(family, s)).collect();
    let norms: Vec<f64> = states.iter().map(|s| sup_norm(family, s)).collect();
    let mean_z = match sampler {
        IsingSampler::Exact => exact_distribution(model)?.expect(&tabulate(n, |s| sup_quad(family, s))),
        IsingSampler::Glauber { .. } => z.iter().copied().collect::<Kahan>().value() / z.len() as f64,
    };
    let e_sup_a_sigma = norms.iter().copied().collect::<Kahan>().value() / norms.len() as f64;
    let sup_op = family.sup_spectral_norm();
    let centered: Vec<f64> = z.iter().map(|v| v - mean_z).collect();
    let tail = TailEstimate::from_samples(&centered, t_grid)?;
    let params = BoundParams::default();
    let bound = if sup_op > 0.0 {
        t_grid.iter().map(|&t| ising_rhs(t, e_sup_a_sigma, sup_op, &params)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let (fit, fit_error) = if sup_op > 0.0 {
        let curve = TailCurve::new(t_grid.to_vec(), tail.ci_high.clone())?;
        match fit_constant(&curve, |t, c| ising_rhs(t, e_sup_a_sigma, sup_op, &BoundParams { big_c: c, ..params })) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("family is identically zero; the tail is degenerate".to_string()))
    };
    let dob = dobrushin_check(model, 0.0)?;
    Ok(IsingChaosReport {
        n,
        sampler,
        dobrushin_norm: dob.one_to_one_norm,
        h_inf: dob.h_inf,
        mean_z,
        e_sup_a_sigma,
        sup_op,
        tail,
        bound,
        fit,
        fit_error,
    })
}

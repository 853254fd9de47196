//! Covariance estimation from vectors with missing coordinates, the moment scaling
//! of masked outer products, the explicit-constant decoupling inequality, and matrix
//! Bernstein experiments.

mod bernstein;
mod data;

pub use bernstein::{bernstein_experiment, rank_one_extremes, BernsteinEnsemble, BernsteinReport};
pub use data::{read_samples_csv, DataMatrix};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{missing_cov_rhs, BoundParams};
use crate::distributions::CoordinateLaw;
use crate::error::{capacity, input, Result};
use crate::fixtures::random_rotation;
use crate::montecarlo::{log_log_slope, mean_stderr, quantile_of, replicate, replicate_sum, RngStream};
use crate::numeric::Kahan;
use crate::SymMatrix;

/// Largest `n` for the `2^n` mask enumeration of [`decoupling_check`].
pub const MAX_DECOUPLING_DIM: usize = 12;

/// Diagonal spectrum for a covariance fixture, optionally rotated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSpec {
    pub kind: SpectrumKind,
    pub n: usize,
    pub kappa: f64,
    #[serde(default)]
    pub rotation_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// `(κ, 1, …, 1)`.
    Spiked,
    /// `κ^{-i}`, `i = 0, …, n−1`.
    Geometric,
}

impl SigmaSpec {
    /// Spiked spectrum with effective rank exactly `target`: `κ = (n − 1)/(target − 1)`.
    pub fn spiked_with_rank(n: usize, target: f64) -> Result<Self> {
        if n < 2 || !(target > 1.0 && target <= n as f64) {
            return input("spiked effective rank must lie in (1, n]");
        }
        Ok(SigmaSpec { kind: SpectrumKind::Spiked, n, kappa: (n as f64 - 1.0) / (target - 1.0), rotation_seed: None })
    }

    pub fn spectrum(&self) -> Result<Vec<f64>> {
        if self.n == 0 {
            return input("covariance dimension must be positive");
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return input("kappa must be positive and finite");
        }
        Ok(match self.kind {
            SpectrumKind::Spiked => (0..self.n).map(|i| if i == 0 { self.kappa } else { 1.0 }).collect(),
            SpectrumKind::Geometric => (0..self.n).map(|i| self.kappa.powi(-(i as i32))).collect(),
        })
    }

    pub fn build(&self) -> Result<SymMatrix> {
        let diag = SymMatrix::from_diag(&self.spectrum()?);
        Ok(match self.rotation_seed {
            None => diag,
            Some(seed) => diag.congruence(&random_rotation(self.n, &mut RngStream::new(seed, 0))),
        })
    }
}

/// `X = Σ^{1/2} ξ` with iid standardized coordinates `ξ_j`.
#[derive(Debug, Clone)]
pub struct CovModel {
    sigma: SymMatrix,
    sqrt_sigma: SymMatrix,
    law: CoordinateLaw,
    shift: f64,
    scale: f64,
    sqrt_diag: Option<Vec<f64>>,
}

impl CovModel {
    /// The coordinate law is centered and scaled to unit variance.
    pub fn new(sigma: SymMatrix, law: CoordinateLaw) -> Result<Self> {
        law.validate()?;
        let var = law.variance();
        if !(var > 0.0) {
            return input("coordinate law has zero variance and cannot be standardized");
        }
        let sqrt_sigma = sigma.sqrt_psd()?;
        let err = sqrt_sigma.square().max_abs_diff(&sigma);
        if err > 1e-9 * sigma.spectral_norm().max(f64::MIN_POSITIVE) {
            return input(format!("square root of sigma is inaccurate ({err:e})"));
        }
        let n = sigma.dim();
        let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || sigma.get(i, j) == 0.0));
        let sqrt_diag = is_diag.then(|| sigma.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect());
        Ok(CovModel { sigma, sqrt_sigma, shift: law.mean(), scale: 1.0 / var.sqrt(), law, sqrt_diag })
    }

    pub fn from_spec(spec: &SigmaSpec, law: CoordinateLaw) -> Result<Self> {
        Self::new(spec.build()?, law)
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn sqrt_sigma(&self) -> &SymMatrix {
        &self.sqrt_sigma
    }

    pub fn law(&self) -> &CoordinateLaw {
        &self.law
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, xi: &mut [f64], out: &mut [f64]) {
        for v in xi.iter_mut() {
            *v = (self.law.sample(rng) - self.shift) * self.scale;
        }
        match &self.sqrt_diag {
            Some(d) => out.iter_mut().zip(d).zip(xi.iter()).for_each(|((o, s), x)| *o = s * x),
            None => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.sqrt_sigma.row(i).iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// One draw of `X`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut xi = vec![0.0; self.dim()];
        let mut out = vec![0.0; self.dim()];
        self.draw_into(rng, &mut xi, &mut out);
        out
    }
}

/// `N × n` matrix of rows `X_i = Σ^{1/2} ξ_i`.
pub fn sample_data(model: &CovModel, n_rows: usize, rng: &mut RngStream) -> Result<DataMatrix> {
    if n_rows == 0 {
        return input("sample size must be at least 1");
    }
    let n = model.dim();
    let mut data = vec![0.0; n_rows * n];
    let mut xi = vec![0.0; n];
    for row in data.chunks_mut(n) {
        model.draw_into(rng, &mut xi, row);
    }
    DataMatrix::new(n_rows, n, data)
}

/// Data with an iid Bernoulli(δ) observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSample {
    pub raw: DataMatrix,
    pub mask: Vec<u8>,
    pub masked: DataMatrix,
    pub delta: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return input(format!("delta must lie in (0, 1], got {delta}"));
    }
    Ok(())
}

pub fn apply_mask(x: &DataMatrix, delta: f64, rng: &mut RngStream) -> Result<MaskedSample> {
    check_delta(delta)?;
    let mask: Vec<u8> = (0..x.as_slice().len()).map(|_| u8::from(delta == 1.0 || rng.random::<f64>() < delta)).collect();
    with_mask(x, mask, delta)
}

/// Masked sample from a caller-supplied 0/1 mask.
pub fn with_mask(x: &DataMatrix, mask: Vec<u8>, delta: f64) -> Result<MaskedSample> {
    check_delta(delta)?;
    if mask.len() != x.as_slice().len() || mask.iter().any(|m| *m > 1) {
        return input("mask must be a 0/1 matrix of the same shape as the data");
    }
    let data = x.as_slice().iter().zip(&mask).map(|(v, m)| if *m == 1 { *v } else { 0.0 }).collect();
    Ok(MaskedSample { raw: x.clone(), masked: DataMatrix::new(x.rows(), x.cols(), data)?, mask, delta })
}

/// Accumulates the upper triangle of `y yᵀ` into `acc` (row-major `n × n`),
/// skipping zero coordinates.
fn add_outer_sparse(acc: &mut [f64], y: &[f64], idx: &mut Vec<usize>) {
    let n = y.len();
    idx.clear();
    idx.extend((0..n).filter(|&i| y[i] != 0.0));
    for (a, &i) in idx.iter().enumerate() {
        let yi = y[i];
        let row = &mut acc[i * n..(i + 1) * n];
        for &j in &idx[a..] {
            row[j] += yi * y[j];
        }
    }
}

fn upper_to_sym(acc: &[f64], n: usize, scale: f64) -> SymMatrix {
    SymMatrix::from_upper_fn(n, |i, j| acc[i * n + j] * scale)
}

/// `Σ̂^{(δ)} = (1/N) Σ_i Y_i Y_iᵀ`.
pub fn sigma_hat_delta(sample: &MaskedSample) -> SymMatrix {
    let n = sample.masked.cols();
    let mut acc = vec![0.0; n * n];
    let mut idx = Vec::with_capacity(n);
    for y in sample.masked.row_iter() {
        add_outer_sparse(&mut acc, y, &mut idx);
    }
    upper_to_sym(&acc, n, 1.0 / sample.masked.rows() as f64)
}

/// `(δ⁻¹ − δ⁻²) Diag(S) + δ⁻² S`.
pub fn sigma_hat_from_delta(s: &SymMatrix, delta: f64) -> Result<SymMatrix> {
    check_delta(delta)?;
    let (a, b) = (1.0 / delta - 1.0 / (delta * delta), 1.0 / (delta * delta));
    Ok(SymMatrix::from_upper_fn(s.dim(), |i, j| if i == j { (a + b) * s.get(i, i) } else { b * s.get(i, j) }))
}

/// Unbiased estimator of `Σ` from a masked sample with known `δ`.
pub fn sigma_hat(sample: &MaskedSample) -> Result<SymMatrix> {
    sigma_hat_from_delta(&sigma_hat_delta(sample), sample.delta)
}

/// `‖Σ̂ − Σ‖`.
pub fn estimation_error(sigma_hat: &SymMatrix, sigma: &SymMatrix) -> Result<f64> {
    Ok(sigma_hat.sub(sigma)?.spectral_norm())
}

/// `Σ̂^{(δ)}` drawn directly, without materializing the raw data and the mask.
fn draw_sigma_hat_delta(model: &CovModel, n_rows: usize, delta: f64, rng: &mut RngStream) -> SymMatrix {
    let n = model.dim();
    let mut acc = vec![0.0; n * n];
    let (mut xi, mut y) = (vec![0.0; n], vec![0.0; n]);
    let mut idx = Vec::with_capacity(n);
    for _ in 0..n_rows {
        model.draw_into(rng, &mut xi, &mut y);
        if delta < 1.0 {
            for v in y.iter_mut() {
                if rng.random::<f64>() >= delta {
                    *v = 0.0;
                }
            }
        }
        add_outer_sparse(&mut acc, &y, &mut idx);
    }
    upper_to_sym(&acc, n, 1.0 / n_rows as f64)
}

/// Exact side of the explicit-constant decoupling inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingMargin {
    /// `E(Σ_{i≠j} δ_i δ_j a_i b_j)²` by enumeration.
    pub exact: f64,
    /// `18 δ² ‖a‖² ‖b‖² + 2 δ⁴ (Σ a)² (Σ b)²`.
    pub bound: f64,
    pub margin: f64,
}

pub fn decoupling_check(a: &[f64], b: &[f64], delta: f64) -> Result<DecouplingMargin> {
    if a.len() != b.len() || a.is_empty() {
        return input("a and b must be nonempty and of equal length");
    }
    check_delta(delta)?;
    let n = a.len();
    if n > MAX_DECOUPLING_DIM {
        return capacity(format!("decoupling enumeration needs n <= {MAX_DECOUPLING_DIM}, got {n}"));
    }
    let mut acc = Kahan::new();
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as i32;
        let p = delta.powi(k) * (1.0 - delta).powi(n as i32 - k);
        if p == 0.0 {
            continue;
        }
        let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            sa += a[i];
            sb += b[i];
            sab += a[i] * b[i];
        }
        let s = sa * sb - sab;
        acc.add(p * s * s);
    }
    let na: f64 = a.iter().map(|v| v * v).sum();
    let nb: f64 = b.iter().map(|v| v * v).sum();
    let (suma, sumb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let bound = 18.0 * delta * delta * na * nb + 2.0 * delta.powi(4) * suma * suma * sumb * sumb;
    let exact = acc.value();
    Ok(DecouplingMargin { exact, bound, margin: bound - exact })
}

/// Monte Carlo moments of masked outer products on a δ-grid with their log-log slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScaling {
    pub delta_grid: Vec<f64>,
    pub off_moment: Vec<f64>,
    pub diag_moment: Vec<f64>,
    pub off_slope: f64,
    pub diag_slope: f64,
    /// Smallest `C` with `E Off(YYᵀ)² ⪯ C δ² Tr(Σ)(Σ + Diag(Σ))` at every grid point
    /// (trace version only).
    pub psd_constant: Option<f64>,
}

fn check_delta_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return input("delta grid needs at least two points");
    }
    for &d in grid {
        check_delta(d)?;
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return input("delta grid must be strictly increasing");
    }
    Ok(())
}

/// One masked draw `Y = δ ⊙ X`.
fn masked_draw(model: &CovModel, delta: f64, rng: &mut RngStream, xi: &mut [f64], y: &mut [f64]) {
    model.draw_into(rng, xi, y);
    for v in y.iter_mut() {
        if rng.random::<f64>() >= delta {
            *v = 0.0;
        }
    }
}

/// `‖E Off(YYᵀ)²‖` and `‖E Diag(YYᵀ)²‖` along the δ-grid.
pub fn lemma_trace_scaling(model: &CovModel, delta_grid: &[f64], reps: usize, rng: &RngStream) -> Result<MomentScaling> {
    check_delta_grid(delta_grid)?;
    if reps < 10_000 {
        return input("lemma_trace_scaling needs at least 10^4 replicates");
    }
    let n = model.dim();
    let sigma = model.sigma();
    let reference = sigma.add(&sigma.diag_part())?.scale(sigma.trace());
    let mut out = MomentScaling {
        delta_grid: delta_grid.to_vec(),
        off_moment: Vec::new(),
        diag_moment: Vec::new(),
        off_slope: 0.0,
        diag_slope: 0.0,
        psd_constant: Some(0.0),
    };
    for (k, &delta) in delta_grid.iter().enumerate() {
        let sums = replicate_sum(reps, n * n + n, &rng.substream(k as u64), |s, buf| {
            let (mut xi, mut y) = (vec![0.0; n], vec![0.0; n]);
            masked_draw(model, delta, s, &mut xi, &mut y);
            let norm2: f64 = y.iter().map(|v| v * v).sum();
            // Off(yyᵀ)²: (i,k) = y_i y_k (‖y‖² − y_i² − y_k²) off the diagonal, y_i²(‖y‖² − y_i²) on it
            for i in 0..n {
                for j in i..n {
                    buf[i * n + j] = if i == j { y[i] * y[i] * (norm2 - y[i] * y[i]) } else { y[i] * y[j] * (norm2 - y[i] * y[i] - y[j] * y[j]) };
                }
                buf[n * n + i] = y[i].powi(4);
            }
        });
        let off = upper_to_sym(&sums[..n * n], n, 1.0 / reps as f64);
        let diag: Vec<f64> = sums[n * n..].iter().map(|v| v / reps as f64).collect();
        out.off_moment.push(off.spectral_norm());
        out.diag_moment.push(diag.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        let c = psd_domination_constant(&off, &reference.scale(delta * delta));
        out.psd_constant = out.psd_constant.map(|best| best.max(c));
    }
    out.off_slope = log_log_slope(delta_grid, &out.off_moment);
    out.diag_slope = log_log_slope(delta_grid, &out.diag_moment);
    Ok(out)
}

/// Smallest `C` (to relative 1e-6) with `m ⪯ C b` for positive definite `b`.
fn psd_domination_constant(m: &SymMatrix, b: &SymMatrix) -> f64 {
    let ok = |c: f64| m.psd_leq(&b.scale(c), 0.0).unwrap_or(false);
    let (mut lo, mut hi) = (1e-12, 1.0);
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    if ok(lo) {
        return lo;
    }
    while hi / lo - 1.0 > 1e-6 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `E(uᵀOff(YYᵀ)u)²` and `E(uᵀDiag(YYᵀ)u)²` along the δ-grid.
pub fn lemma_norm_scaling(model: &CovModel, u: &[f64], delta_grid: &[f64], reps: usize, rng: &RngStream) -> Result<MomentScaling> {
    check_delta_grid(delta_grid)?;
    if u.len() != model.dim() {
        return input("u must have the model dimension");
    }
    let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (unorm - 1.0).abs() > 1e-9 {
        return input("u must be a unit vector");
    }
    if reps < 10_000 {
        return input("lemma_norm_scaling needs at least 10^4 replicates");
    }
    let n = model.dim();
    let mut out = MomentScaling {
        delta_grid: delta_grid.to_vec(),
        off_moment: Vec::new(),
        diag_moment: Vec::new(),
        off_slope: 0.0,
        diag_slope: 0.0,
        psd_constant: None,
    };
    for (k, &delta) in delta_grid.iter().enumerate() {
        let sums = replicate_sum(reps, 2, &rng.substream(k as u64), |s, buf| {
            let (mut xi, mut y) = (vec![0.0; n], vec![0.0; n]);
            masked_draw(model, delta, s, &mut xi, &mut y);
            let proj: f64 = u.iter().zip(&y).map(|(a, b)| a * b).sum();
            let d: f64 = u.iter().zip(&y).map(|(a, b)| a * a * b * b).sum();
            let off = proj * proj - d;
            buf[0] = off * off;
            buf[1] = d * d;
        });
        out.off_moment.push(sums[0] / reps as f64);
        out.diag_moment.push(sums[1] / reps as f64);
    }
    out.off_slope = log_log_slope(delta_grid, &out.off_moment);
    out.diag_slope = log_log_slope(delta_grid, &out.diag_moment);
    Ok(out)
}

/// Mean of `Σ̂` over replicates against `Σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub delta: f64,
    pub n_rows: usize,
    pub reps: usize,
    /// `‖mean Σ̂ − Σ‖`.
    pub error: f64,
    /// Hilbert-Schmidt norm of the entrywise standard errors of the mean.
    pub mc_se: f64,
    pub sigma_norm: f64,
}

pub fn unbiasedness_check(model: &CovModel, n_rows: usize, delta: f64, reps: usize, rng: &RngStream) -> Result<UnbiasednessReport> {
    check_delta(delta)?;
    if n_rows == 0 || reps < 100 {
        return input("unbiasedness check needs N >= 1 and at least 100 replicates");
    }
    let n = model.dim();
    let len = n * n;
    let sums = replicate_sum(reps, 2 * len, rng, |s, buf| {
        let est = sigma_hat_from_delta(&draw_sigma_hat_delta(model, n_rows, delta, s), delta).expect("delta checked");
        for (k, v) in est.as_slice().iter().enumerate() {
            buf[k] = *v;
            buf[len + k] = v * v;
        }
    });
    let r = reps as f64;
    let mean: Vec<f64> = sums[..len].iter().map(|v| v / r).collect();
    let var_sum: f64 = (0..len).map(|k| ((sums[len + k] / r - mean[k] * mean[k]) * r / (r - 1.0)).max(0.0) / r).sum();
    let mean_m = SymMatrix::from_row_major(n, mean)?;
    Ok(UnbiasednessReport {
        delta,
        n_rows,
        reps,
        error: estimation_error(&mean_m, model.sigma())?,
        mc_se: var_sum.sqrt(),
        sigma_norm: model.sigma().spectral_norm(),
    })
}

/// One `(N, δ)` cell of the missing-data experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingCovCell {
    pub n_rows: usize,
    pub delta: f64,
    pub median: f64,
    pub q90: f64,
    pub mean: f64,
    pub stderr: f64,
    /// Bound at `t = ln 10` with `C = 1`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingCovReport {
    pub eff_rank: f64,
    pub sigma_norm: f64,
    pub reps: usize,
    pub cells: Vec<MissingCovCell>,
    /// Median-error slope against `N`, one per δ.
    pub slope_vs_n: Vec<(f64, f64)>,
    /// Median-error slope against `δ`, one per `N`.
    pub slope_vs_delta: Vec<(usize, f64)>,
    /// Smallest `C` making the bound dominate every 0.9-quantile.
    pub fitted_c: f64,
}

/// Estimation error of `Σ̂` across an `(N, δ)` lattice.
pub fn missing_cov_experiment(model: &CovModel, n_grid: &[usize], delta_grid: &[f64], reps: usize, rng: &RngStream) -> Result<MissingCovReport> {
    if n_grid.is_empty() || n_grid.contains(&0) {
        return input("N grid must be nonempty with positive entries");
    }
    for &d in delta_grid {
        check_delta(d)?;
    }
    if delta_grid.is_empty() || reps < 10 {
        return input("missing_cov_experiment needs a delta grid and at least 10 replicates");
    }
    let sigma = model.sigma();
    let sigma_norm = sigma.spectral_norm();
    let eff_rank = sigma.effective_rank()?;
    let t = 10f64.ln();
    let mut cells = Vec::new();
    for (a, &n_rows) in n_grid.iter().enumerate() {
        for (b, &delta) in delta_grid.iter().enumerate() {
            let stream = rng.substream((a * delta_grid.len() + b) as u64);
            let errors = replicate(reps, &stream, |s| {
                let est = sigma_hat_from_delta(&draw_sigma_hat_delta(model, n_rows, delta, s), delta).expect("delta checked");
                estimation_error(&est, sigma).expect("same dimension")
            })?;
            let (mean, stderr) = mean_stderr(&errors);
            let bound = missing_cov_rhs(t, sigma_norm, eff_rank, n_rows as f64, delta, &BoundParams::default())?.value;
            cells.push(MissingCovCell { n_rows, delta, median: quantile_of(&errors, 0.5), q90: quantile_of(&errors, 0.9), mean, stderr, bound });
        }
    }
    let cell = |a: usize, b: usize| &cells[a * delta_grid.len() + b];
    let slope_vs_n = if n_grid.len() >= 2 {
        (0..delta_grid.len())
            .map(|b| {
                let x: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
                let y: Vec<f64> = (0..n_grid.len()).map(|a| cell(a, b).median).collect();
                (delta_grid[b], log_log_slope(&x, &y))
            })
            .collect()
    } else {
        Vec::new()
    };
    let slope_vs_delta = if delta_grid.len() >= 2 {
        (0..n_grid.len())
            .map(|a| {
                let y: Vec<f64> = (0..delta_grid.len()).map(|b| cell(a, b).median).collect();
                (n_grid[a], log_log_slope(delta_grid, &y))
            })
            .collect()
    } else {
        Vec::new()
    };
    let fitted_c = cells.iter().map(|c| c.q90 / c.bound).fold(0.0, f64::max);
    Ok(MissingCovReport { eff_rank, sigma_norm, reps, cells, slope_vs_n, slope_vs_delta, fitted_c })
}

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bounds::{bernstein_rhs, fit_constant, BoundParams, BoundValue, ConstantFit, TailCurve};
use crate::distributions::{psi_alpha_empirical, PsiBracket};
use crate::error::{input, Result};
use crate::montecarlo::{check_grid, replicate_sum, replicate_with, RngStream, TailEstimate};
use crate::SymMatrix;

/// Sums `S = Σ_{i≤N} (g_i g_iᵀ − Σ)` with `g_i ~ N(0, Σ)` iid. Spectral statistics
/// are rotation invariant, so `Σ` is represented by its spectrum and the
/// simulation runs in its eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinEnsemble {
    pub spectrum: Vec<f64>,
    pub n_terms: usize,
}

impl BernsteinEnsemble {
    pub fn new(spectrum: Vec<f64>, n_terms: usize) -> Result<Self> {
        if spectrum.is_empty() || spectrum.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || spectrum.iter().all(|v| *v == 0.0) {
            return input("spectrum must be nonnegative, finite and not identically zero");
        }
        if n_terms == 0 {
            return input("ensemble needs at least one term");
        }
        Ok(BernsteinEnsemble { spectrum, n_terms })
    }

    /// Spiked `Σ = diag(κ, 1, …, 1)` with `κ` chosen so that `r̃(R) = target`.
    pub fn spiked_for_rank(n: usize, target: f64, n_terms: usize) -> Result<Self> {
        if n < 2 || !(target > 1.0 && target <= n as f64) {
            return input("target effective rank must lie in (1, n]");
        }
        let rank_at = |kappa: f64| {
            let mut s = vec![1.0; n];
            s[0] = kappa;
            BernsteinEnsemble { spectrum: s, n_terms }.eff_rank()
        };
        // r̃(R) decreases from n at κ = 1 towards 1 as κ grows
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        while rank_at(hi) > target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rank_at(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut s = vec![1.0; n];
        s[0] = 0.5 * (lo + hi);
        Self::new(s, n_terms)
    }

    /// `Σ` the orthogonal projection onto `rank` coordinates, so `r̃(R) = rank`.
    pub fn flat(n: usize, rank: usize, n_terms: usize) -> Result<Self> {
        if rank == 0 || rank > n {
            return input("flat rank must lie in 1..=n");
        }
        Self::new((0..n).map(|i| if i < rank { 1.0 } else { 0.0 }).collect(), n_terms)
    }

    pub fn dim(&self) -> usize {
        self.spectrum.len()
    }

    /// Diagonal of `R = Σ_i E X_i² = N (Tr(Σ) Σ + Σ²)`.
    pub fn r_diagonal(&self) -> Vec<f64> {
        let tr: f64 = self.spectrum.iter().sum();
        self.spectrum.iter().map(|l| self.n_terms as f64 * (tr * l + l * l)).collect()
    }

    /// `σ² = ‖Σ_i E X_i²‖`.
    pub fn sigma2(&self) -> f64 {
        self.r_diagonal().into_iter().fold(0.0, f64::max)
    }

    /// `r̃(R)`.
    pub fn eff_rank(&self) -> f64 {
        let r = self.r_diagonal();
        r.iter().sum::<f64>() / r.iter().copied().fold(0.0, f64::max)
    }

    fn draw_factor<R: Rng + ?Sized>(&self, rng: &mut R, h: &mut [f64], sqrt_l: &[f64]) {
        for (v, s) in h.iter_mut().zip(sqrt_l) {
            let z: f64 = rng.sample(StandardNormal);
            *v = s * z;
        }
    }
}

/// Extreme eigenvalues of `diag(d) + v vᵀ` through the secular equation
/// `1 + Σ_g w_g/(d_g − λ) = 0`, with coordinates grouped by equal `d`.
#[derive(Debug, Clone)]
pub struct RankOneSolver {
    values: Vec<f64>,
    group: Vec<usize>,
    multiplicity: Vec<usize>,
}

impl RankOneSolver {
    pub fn new(d: &[f64]) -> Self {
        let mut values = d.to_vec();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        let group = d.iter().map(|x| values.iter().position(|v| v == x).expect("value present")).collect();
        let mut multiplicity = vec![0; values.len()];
        for &g in &group {
            multiplicity[g] += 1;
        }
        RankOneSolver { values, group, multiplicity }
    }

    /// `(λ_min, λ_max)`.
    pub fn extremes(&self, v: &[f64]) -> (f64, f64) {
        let mut w = vec![0.0; self.values.len()];
        for (x, &g) in v.iter().zip(&self.group) {
            w[g] += x * x;
        }
        let total: f64 = w.iter().sum();
        // d_g stays an eigenvalue when v misses its group or the group is repeated
        let kept = (0..w.len()).filter(|&g| w[g] == 0.0 || self.multiplicity[g] > 1).map(|g| self.values[g]);
        let (d_min, d_max) = kept.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let active: Vec<usize> = (0..w.len()).filter(|&g| w[g] > 0.0).collect();
        if active.is_empty() {
            return (d_min, d_max);
        }
        let secular = |lambda: f64| 1.0 + self.values.iter().zip(&w).map(|(d, wg)| wg / (d - lambda)).sum::<f64>();
        let root = |a: f64, b: f64| {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if secular(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let top = self.values[*active.last().expect("nonempty")];
        let lambda_max = d_max.max(root(top, top + total));
        let bottom = self.values[active[0]];
        let upper = active.get(1).map_or(bottom + total, |&g| self.values[g]);
        let lambda_min = d_min.min(root(bottom, upper));
        (lambda_min, lambda_max)
    }

    pub fn spectral_norm(&self, v: &[f64]) -> f64 {
        let (lo, hi) = self.extremes(v);
        hi.abs().max(lo.abs())
    }
}

/// Free-function form of [`RankOneSolver::extremes`].
pub fn rank_one_extremes(d: &[f64], v: &[f64]) -> (f64, f64) {
    RankOneSolver::new(d).extremes(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub n: usize,
    pub n_terms: usize,
    pub tail: TailEstimate,
    pub sigma2: f64,
    /// Monte Carlo estimate of `σ²`, as a cross-check of the closed form.
    pub sigma2_mc: f64,
    /// ψ₁ norm of `max_i ‖X_i‖` from the empirical sample.
    pub psi1_max: PsiBracket,
    pub eff_rank: f64,
    pub params: BoundParams<f64>,
    pub bound: Vec<BoundValue<f64>>,
    pub fit: Option<ConstantFit>,
    pub fit_error: Option<String>,
}

impl BernsteinReport {
    pub fn rhs(&self, u: f64, params: &BoundParams<f64>) -> Result<BoundValue<f64>> {
        bernstein_rhs(u, self.sigma2, self.psi1_max.point, self.eff_rank, params)
    }

    /// Whether the bound with `params` stays above the upper confidence band at
    /// every valid grid point; also returns the number of valid points.
    pub fn dominated_by(&self, params: &BoundParams<f64>) -> Result<(bool, usize)> {
        let mut valid = 0;
        let mut ok = true;
        for (k, &u) in self.tail.t_grid.iter().enumerate() {
            let b = self.rhs(u, params)?;
            if b.valid {
                valid += 1;
                ok &= b.value >= self.tail.ci_high[k];
            }
        }
        Ok((ok, valid))
    }
}

/// Empirical tail of `‖Σ_i X_i‖` against the matrix Bernstein bound; the exponent
/// constant is fitted with `C` and `c1` taken from `params`.
pub fn bernstein_experiment(
    ensemble: &BernsteinEnsemble,
    u_grid: &[f64],
    reps: usize,
    rng: &RngStream,
    params: &BoundParams<f64>,
) -> Result<BernsteinReport> {
    check_grid(u_grid)?;
    params.validate()?;
    if u_grid[0] < 0.0 {
        return input("u grid must be nonnegative");
    }
    if reps < 1000 {
        return input("bernstein_experiment needs at least 1000 replicates");
    }
    let n = ensemble.dim();
    let terms = ensemble.n_terms;
    let sqrt_l: Vec<f64> = ensemble.spectrum.iter().map(|v| v.sqrt()).collect();
    let neg: Vec<f64> = ensemble.spectrum.iter().map(|v| -v).collect();
    let solver = RankOneSolver::new(&neg);
    let pairs = replicate_with(reps, &rng.substream(0), |s| {
        let mut acc = vec![0.0; n * n];
        let mut h = vec![0.0; n];
        let mut max_term = 0.0f64;
        for _ in 0..terms {
            ensemble.draw_factor(s, &mut h, &sqrt_l);
            for i in 0..n {
                let hi = h[i];
                let row = &mut acc[i * n..(i + 1) * n];
                for j in i..n {
                    row[j] += hi * h[j];
                }
            }
            max_term = max_term.max(solver.spectral_norm(&h));
        }
        let sum = SymMatrix::from_upper_fn(n, |i, j| if i == j { acc[i * n + i] - terms as f64 * ensemble.spectrum[i] } else { acc[i * n + j] });
        (sum.spectral_norm(), max_term)
    });
    let (norms, maxima): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let tail = TailEstimate::from_samples(&norms, u_grid)?;
    let psi1_max = psi_alpha_empirical(&maxima, 1.0)?;

    let mc_reps = reps.min(20_000);
    let second = replicate_sum(mc_reps, n * n, &rng.substream(1), |s, buf| {
        let mut h = vec![0.0; n];
        ensemble.draw_factor(s, &mut h, &sqrt_l);
        let norm2: f64 = h.iter().map(|v| v * v).sum();
        // (hhᵀ − D)² = ‖h‖² hhᵀ − hhᵀD − Dhhᵀ + D²
        for i in 0..n {
            for j in i..n {
                let mut v = h[i] * h[j] * (norm2 - ensemble.spectrum[i] - ensemble.spectrum[j]);
                if i == j {
                    v += ensemble.spectrum[i] * ensemble.spectrum[i];
                }
                buf[i * n + j] = v;
            }
        }
    });
    let sigma2_mc = SymMatrix::from_upper_fn(n, |i, j| second[i * n + j] / mc_reps as f64).spectral_norm() * terms as f64;

    let sigma2 = ensemble.sigma2();
    let eff_rank = ensemble.eff_rank();
    let bound = u_grid.iter().map(|&u| bernstein_rhs(u, sigma2, psi1_max.point, eff_rank, params)).collect::<Result<Vec<_>>>()?;
    let curve = TailCurve::new(u_grid.to_vec(), tail.ci_high.clone())?;
    let fitted = fit_constant(&curve, |u, c| bernstein_rhs(u, sigma2, psi1_max.point, eff_rank, &BoundParams { c, ..*params }));
    let (fit, fit_error) = match fitted {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(BernsteinReport { n, n_terms: terms, tail, sigma2, sigma2_mc, psi1_max, eff_rank, params: *params, bound, fit, fit_error })
}

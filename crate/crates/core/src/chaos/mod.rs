//! Chaos suprema `Z = sup_A (XᵀAX − g(A))`, their resampling variance proxy `V₊`,
//! exact entropy computations and the enumeration checks of the inequalities used
//! to bound them.

use serde::{Deserialize, Serialize};

use crate::distributions::{psi_alpha_norm, CoordinateLaw, ProductDistribution};
use crate::error::{capacity, domain, input, Result};
use crate::montecarlo::{check_grid, replicate, MeanEstimate, RngStream, Z95};
use crate::numeric::{kahan_sum, log_mean_exp, xlogx_gap, Kahan};
use crate::{MatrixFamily, SymMatrix};

/// Largest dimension for the `2^dim` sign-vector enumerations.
pub const MAX_SIGN_DIM: usize = 20;

/// `E XᵀAX` for independent coordinates: `Σ_i A_ii E X_i² + Σ_{i≠j} A_ij E X_i E X_j`.
pub fn expected_quadratic(a: &SymMatrix, dist: &ProductDistribution) -> f64 {
    let n = a.dim();
    let means: Vec<f64> = (0..n).map(|i| dist.law(i).mean()).collect();
    let mut acc = Kahan::new();
    for i in 0..n {
        acc.add(a.get(i, i) * dist.law(i).second_moment());
        for j in 0..n {
            if i != j {
                acc.add(a.get(i, j) * means[i] * means[j]);
            }
        }
    }
    acc.value()
}

/// Family, coordinate law and per-member centering `g(A)`.
#[derive(Debug, Clone)]
pub struct ChaosProblem {
    family: MatrixFamily,
    dist: ProductDistribution,
    centering: Vec<f64>,
}

/// Value of `Z` at a point together with the maximizing member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZValue {
    pub value: f64,
    pub argmax: usize,
}

impl ChaosProblem {
    /// Centering `g(A) = E XᵀAX`, computed exactly from the coordinate moments.
    pub fn new(family: MatrixFamily, dist: ProductDistribution) -> Result<Self> {
        let centering = family.iter().map(|a| expected_quadratic(a, &dist)).collect();
        Self::with_centering(family, dist, centering)
    }

    pub fn with_centering(family: MatrixFamily, dist: ProductDistribution, centering: Vec<f64>) -> Result<Self> {
        if family.dim() != dist.n() {
            return input(format!("family dim {} does not match distribution n {}", family.dim(), dist.n()));
        }
        if centering.len() != family.len() {
            return input(format!("{} centering values for {} members", centering.len(), family.len()));
        }
        if centering.iter().any(|g| !g.is_finite()) {
            return input("centering values must be finite");
        }
        Ok(ChaosProblem { family, dist, centering })
    }

    pub fn family(&self) -> &MatrixFamily {
        &self.family
    }

    pub fn dist(&self) -> &ProductDistribution {
        &self.dist
    }

    pub fn centering(&self) -> &[f64] {
        &self.centering
    }

    pub fn z_value(&self, x: &[f64]) -> Result<ZValue> {
        check_len(x, self.family.dim())?;
        Ok(self.z_raw(x))
    }

    pub(crate) fn z_raw(&self, x: &[f64]) -> ZValue {
        let mut best = ZValue { value: f64::NEG_INFINITY, argmax: 0 };
        for (k, (a, g)) in self.family.iter().zip(&self.centering).enumerate() {
            let v = a.quad_form(x) - g;
            if v > best.value {
                best = ZValue { value: v, argmax: k };
            }
        }
        best
    }

    /// `V₊(x) = Σ_i E'(Z(x) − Z(x⁽ⁱ⁾))₊²`, with `x⁽ⁱ⁾` carrying an independent copy
    /// of coordinate `i`; the expectation runs exactly over the coordinate atoms.
    pub fn v_plus_exact(&self, x: &[f64]) -> Result<f64> {
        check_len(x, self.family.dim())?;
        let atoms = self.coordinate_atoms()?;
        Ok(self.v_plus_with(x, &atoms).1)
    }

    fn coordinate_atoms(&self) -> Result<Vec<Vec<(f64, f64)>>> {
        (0..self.dist.n())
            .map(|i| match self.dist.law(i).atoms() {
                Some(a) => Ok(a),
                None => capacity("V+ needs finite-support coordinates"),
            })
            .collect()
    }

    /// Returns `(Z(x), V₊(x))`.
    fn v_plus_with(&self, x: &[f64], atoms: &[Vec<(f64, f64)>]) -> (f64, f64) {
        let images: Vec<Vec<f64>> = self.family.iter().map(|a| a.matvec(x)).collect();
        let quads: Vec<f64> = images.iter().map(|ax| dot(x, ax)).collect();
        let z = quads.iter().zip(&self.centering).map(|(q, g)| q - g).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Kahan::new();
        for (i, coord) in atoms.iter().enumerate() {
            for &(value, p) in coord {
                let d = value - x[i];
                if d == 0.0 {
                    continue;
                }
                let z_new = self
                    .family
                    .iter()
                    .enumerate()
                    .map(|(k, a)| quads[k] + 2.0 * d * images[k][i] + d * d * a.get(i, i) - self.centering[k])
                    .fold(f64::NEG_INFINITY, f64::max);
                let gap = (z - z_new).max(0.0);
                acc.add(p * gap * gap);
            }
        }
        (z, acc.value())
    }

    /// Support of `(Z, V₊, probability)` by full enumeration.
    pub fn z_v_table(&self) -> Result<Vec<(f64, f64, f64)>> {
        let atoms = self.coordinate_atoms()?;
        let mut out = Vec::new();
        self.dist.for_each_atom(|x, p| {
            let (z, v) = self.v_plus_with(x, &atoms);
            out.push((z, v, p));
        })?;
        Ok(out)
    }
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return input(format!("vector of length {} for dimension {n}", x.len()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sup_A ‖Ax‖₂`.
pub fn sup_norm_ax(family: &MatrixFamily, x: &[f64]) -> Result<f64> {
    check_len(x, family.dim())?;
    Ok(family.iter().map(|a| norm(&a.matvec(x))).fold(0.0, f64::max))
}

fn check_probs(values: &[f64], probs: &[f64]) -> Result<()> {
    if values.len() != probs.len() || values.is_empty() {
        return input("values and probabilities must be nonempty and of equal length");
    }
    if values.iter().any(|v| !v.is_finite()) || probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return input("values must be finite and probabilities nonnegative");
    }
    let total = kahan_sum(probs.iter().copied());
    if (total - 1.0).abs() > 1e-10 {
        return input(format!("probabilities sum to {total}"));
    }
    Ok(())
}

/// `Ent(e^{λZ}) = e^{m} · S · KL` with `m = max λZ`, `S = E e^{λZ − m}` and
/// `KL = Σ p φ(λZ − m − ln S)`, `φ(r) = e^r (r − 1) + 1 ≥ 0`.
struct ScaledEntropy {
    anchor: f64,
    mass: f64,
    kl: f64,
}

fn scaled_entropy(values: &[f64], probs: &[f64], lambda: f64) -> ScaledEntropy {
    let scaled: Vec<f64> = values.iter().map(|z| lambda * z).collect();
    let anchor = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass = kahan_sum(scaled.iter().zip(probs).map(|(s, p)| p * (s - anchor).exp()));
    let log_mass = mass.ln();
    let kl = kahan_sum(scaled.iter().zip(probs).map(|(s, p)| p * xlogx_gap(s - anchor - log_mass)));
    ScaledEntropy { anchor, mass, kl }
}

/// `Ent(e^{λZ}) = E[λZ e^{λZ}] − E e^{λZ} ln E e^{λZ}` for a finitely supported `Z`.
pub fn entropy_of_exp(values: &[f64], probs: &[f64], lambda: f64) -> Result<f64> {
    check_probs(values, probs)?;
    if !lambda.is_finite() {
        return input("lambda must be finite");
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let e = scaled_entropy(values, probs, lambda);
    Ok(e.anchor.exp() * e.mass * e.kl)
}

/// `λ² E[V₊ e^{λZ}] − Ent(e^{λZ})` from an explicit `(Z, V₊, p)` table.
pub fn mls_margin(table: &[(f64, f64, f64)], lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return input(format!("lambda must be finite and nonnegative, got {lambda}"));
    }
    let (z, rest): (Vec<f64>, Vec<(f64, f64)>) = table.iter().map(|&(z, v, p)| (z, (v, p))).unzip();
    let (v, p): (Vec<f64>, Vec<f64>) = rest.into_iter().unzip();
    check_probs(&z, &p)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let e = scaled_entropy(&z, &p, lambda);
    let moment = kahan_sum(z.iter().zip(&v).zip(&p).map(|((z, v), p)| p * v * (lambda * z - e.anchor).exp()));
    Ok(e.anchor.exp() * (lambda * lambda * moment - e.mass * e.kl))
}

/// Exact modified log-Sobolev margin over the full support.
pub fn mls_check(problem: &ChaosProblem, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return input(format!("lambda must be nonnegative, got {lambda}"));
    }
    mls_margin(&problem.z_v_table()?, lambda)
}

/// `E e^{λY} ln E e^W + Ent(e^{λY}) − E[W e^{λY}]`, nonnegative by the entropy
/// variational formula.
pub fn entropy_variational_check(y: &[f64], w: &[f64], probs: &[f64], lambda: f64) -> Result<f64> {
    check_probs(y, probs)?;
    check_probs(w, probs)?;
    if !lambda.is_finite() {
        return input("lambda must be finite");
    }
    let log_ew = log_mean_exp(w, probs);
    let e = scaled_entropy(y, probs, lambda);
    // E_q W with q ∝ p e^{λY}
    let tilted = kahan_sum(y.iter().zip(w).zip(probs).map(|((y, w), p)| p * w * (lambda * y - e.anchor).exp())) / e.mass;
    Ok(e.anchor.exp() * e.mass * (log_ew + e.kl - tilted))
}

/// `X = Y + W` with `Y_i = X_i 1(|X_i| ≤ M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSplit {
    pub level: f64,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn truncate(x: &[f64], level: f64) -> Result<TruncationSplit> {
    if !(level > 0.0) {
        return input(format!("truncation level must be positive, got {level}"));
    }
    let (y, w) = x.iter().map(|&v| if v.abs() <= level { (v, 0.0) } else { (0.0, v) }).unzip();
    Ok(TruncationSplit { level, y, w })
}

/// `M = 8 E max_i |X_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationLevel {
    pub level: f64,
    pub mean_max_abs: f64,
    pub stderr: f64,
    pub exact: bool,
}

/// Exact for finite-support coordinates (through the distribution function of the
/// maximum), Monte Carlo otherwise.
pub fn truncation_level(dist: &ProductDistribution, reps: usize, rng: &RngStream) -> Result<TruncationLevel> {
    if reps < 1000 {
        return input("truncation_level needs at least 1000 replicates");
    }
    if dist.finite_support() {
        let atoms: Vec<Vec<(f64, f64)>> = (0..dist.n()).map(|i| dist.law(i).atoms().expect("finite")).collect();
        let mut cuts: Vec<f64> = atoms.iter().flatten().map(|a| a.0.abs()).collect();
        cuts.push(0.0);
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        let mut acc = Kahan::new();
        for pair in cuts.windows(2) {
            // P(max |X_i| > s) on [pair[0], pair[1])
            let below: f64 = atoms
                .iter()
                .map(|coord| coord.iter().filter(|a| a.0.abs() <= pair[0]).map(|a| a.1).sum::<f64>())
                .product();
            acc.add((pair[1] - pair[0]) * (1.0 - below));
        }
        let mean = acc.value();
        return Ok(TruncationLevel { level: 8.0 * mean, mean_max_abs: mean, stderr: 0.0, exact: true });
    }
    let values = replicate(reps, rng, |s| dist.sample(s).iter().fold(0.0f64, |m, v| m.max(v.abs())))?;
    let est = MeanEstimate::from_samples(&values);
    Ok(TruncationLevel { level: 8.0 * est.mean, mean_max_abs: est.mean, stderr: est.stderr, exact: false })
}

/// `P(max_i |X_i| > M)`, exact through `1 − Π_i P(|X_i| ≤ M)`.
pub fn markov_truncation_check(dist: &ProductDistribution, level: f64) -> Result<f64> {
    if !(level > 0.0) {
        return input(format!("truncation level must be positive, got {level}"));
    }
    let log_inside: f64 = (0..dist.n())
        .map(|i| {
            let law = dist.law(i);
            let outside = match law.atoms() {
                Some(atoms) => atoms.iter().filter(|a| a.0.abs() > level).map(|a| a.1).sum(),
                None => statrs::function::erf::erfc(level / std::f64::consts::SQRT_2),
            };
            (-outside).ln_1p()
        })
        .sum();
    Ok(-log_inside.exp_m1())
}

/// Visits `B ε` for every member and every sign vector `ε ∈ {−1, 1}^n`, walking
/// the cube in Gray-code order with periodic exact recomputation.
fn for_each_sign_image(members: &[&SymMatrix], mut visit: impl FnMut(&[Vec<f64>])) -> Result<()> {
    let n = members[0].dim();
    if n > MAX_SIGN_DIM {
        return capacity(format!("sign enumeration needs dim <= {MAX_SIGN_DIM}, got {n}"));
    }
    let mut eps = vec![-1.0; n];
    let mut images: Vec<Vec<f64>> = members.iter().map(|b| b.matvec(&eps)).collect();
    visit(&images);
    for step in 1u64..(1u64 << n) {
        let j = step.trailing_zeros() as usize;
        eps[j] = -eps[j];
        if step % 256 == 0 {
            for (img, b) in images.iter_mut().zip(members) {
                *img = b.matvec(&eps);
            }
        } else {
            let d = 2.0 * eps[j];
            for (img, b) in images.iter_mut().zip(members) {
                for (k, v) in img.iter_mut().enumerate() {
                    *v += d * b.get(k, j);
                }
            }
        }
        visit(&images);
    }
    Ok(())
}

/// `E‖Bε‖ / ‖B‖_HS` over all sign vectors; at least `1/√2`.
pub fn khinchin_check(b: &SymMatrix) -> Result<f64> {
    let hs = b.hs_norm();
    if hs == 0.0 {
        return domain("Khinchin ratio undefined for the zero matrix");
    }
    let mut acc = Kahan::new();
    for_each_sign_image(&[b], |img| acc.add(norm(&img[0])))?;
    let count = (1u64 << b.dim()) as f64;
    Ok(acc.value() / count / hs)
}

/// `4 sup‖B‖² − Var(sup_B ‖Bε‖)` over all sign vectors; nonnegative.
pub fn convex_poincare_check(family: &MatrixFamily) -> Result<f64> {
    let members: Vec<&SymMatrix> = family.iter().collect();
    let mut values = Vec::with_capacity(1 << family.dim().min(MAX_SIGN_DIM));
    for_each_sign_image(&members, |imgs| values.push(imgs.iter().map(|y| norm(y)).fold(0.0, f64::max)))?;
    let mean = kahan_sum(values.iter().copied()) / values.len() as f64;
    let var = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean))) / values.len() as f64;
    let op = family.sup_spectral_norm();
    Ok(4.0 * op * op - var)
}

/// `E sup_B YᵀBY − E sup_B YᵀDiag(B)Y` for PSD members and iid symmetric
/// coordinates, by enumeration; nonnegative.
pub fn diag_comparison_check(family: &MatrixFamily, law: &CoordinateLaw) -> Result<f64> {
    if let Some(k) = family.iter().position(|b| !b.is_psd()) {
        return domain(format!("member {k} is not positive semidefinite"));
    }
    if !law.is_symmetric() {
        return input("diagonal comparison needs a symmetric coordinate law");
    }
    let dist = ProductDistribution::iid(family.dim(), law.clone())?;
    let diags: Vec<Vec<f64>> = family.iter().map(|b| b.diagonal()).collect();
    let mut full = Kahan::new();
    let mut diag = Kahan::new();
    dist.for_each_atom(|y, p| {
        let f = family.iter().map(|b| b.quad_form(y)).fold(f64::NEG_INFINITY, f64::max);
        let d = diags
            .iter()
            .map(|dg| dg.iter().zip(y).map(|(b, v)| b * v * v).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        full.add(p * f);
        diag.add(p * d);
    })?;
    Ok(full.value() - diag.value())
}

/// Ratio of two means with a delta-method 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: usize,
}

impl RatioEstimate {
    pub fn from_pairs(num: &[f64], den: &[f64]) -> Result<Self> {
        let r = num.len() as f64;
        let mn = kahan_sum(num.iter().copied()) / r;
        let md = kahan_sum(den.iter().copied()) / r;
        if md == 0.0 {
            return domain("ratio denominator has zero mean");
        }
        let ratio = mn / md;
        let resid = kahan_sum(num.iter().zip(den).map(|(a, b)| (a - ratio * b).powi(2))) / (r - 1.0).max(1.0);
        let stderr = (resid / r).sqrt() / md.abs();
        Ok(RatioEstimate { ratio, stderr, ci_low: ratio - Z95 * stderr, ci_high: ratio + Z95 * stderr, reps: num.len() })
    }
}

/// Monte Carlo `E sup‖Diag(A)X‖ / E sup‖AX‖`.
pub fn diag_removal_ratio(family: &MatrixFamily, dist: &ProductDistribution, reps: usize, rng: &RngStream) -> Result<RatioEstimate> {
    if family.dim() != dist.n() {
        return input("family and distribution dimensions differ");
    }
    if !dist.is_centered() {
        return input("diagonal removal needs centered coordinates");
    }
    if reps < 100 {
        return input("diag_removal_ratio needs at least 100 replicates");
    }
    let diags = family.diag_parts();
    let pairs = crate::montecarlo::replicate_with(reps, rng, |s| {
        let x = dist.sample(s);
        (sup_norm_ax(&diags, &x).expect("dims checked"), sup_norm_ax(family, &x).expect("dims checked"))
    });
    let (num, den): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    RatioEstimate::from_pairs(&num, &den)
}

/// Empirical `sup‖AX‖` against the Gaussian reference `K (E sup‖AG‖ + sup‖A‖ √t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComparison {
    pub t_grid: Vec<f64>,
    /// Mean at `t = 0`, the `1 − e^{−t}` quantile otherwise.
    pub empirical: Vec<f64>,
    /// Upper 95% confidence bound for `empirical`.
    pub empirical_upper: Vec<f64>,
    pub reference: Vec<f64>,
    pub psi2_max: f64,
    pub e_sup_ag: MeanEstimate,
    pub sup_op: f64,
    /// Smallest `C` with `C · reference ≥ empirical_upper` on the whole grid.
    pub multiplier: f64,
}

pub fn gaussian_comparison_estimate(
    family: &MatrixFamily,
    dist: &ProductDistribution,
    t_grid: &[f64],
    reps: usize,
    rng: &RngStream,
) -> Result<GaussianComparison> {
    if family.dim() != dist.n() {
        return input("family and distribution dimensions differ");
    }
    if !dist.is_centered() {
        return input("Gaussian comparison needs centered coordinates");
    }
    check_grid(t_grid)?;
    if t_grid[0] < 0.0 {
        return input("t grid must be nonnegative");
    }
    if reps < 1000 {
        return input("gaussian_comparison_estimate needs at least 1000 replicates");
    }
    let psi2_max = (0..dist.n()).map(|i| psi_alpha_norm(dist.law(i), 2.0)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let gauss = ProductDistribution::iid(dist.n(), CoordinateLaw::StandardGaussian)?;
    let x_side = replicate(reps, &rng.substream(0), |s| sup_norm_ax(family, &dist.sample(s)).expect("dims checked"))?;
    let g_side = replicate(reps, &rng.substream(1), |s| sup_norm_ax(family, &gauss.sample(s)).expect("dims checked"))?;
    let e_sup_ag = MeanEstimate::from_samples(&g_side);
    let x_mean = MeanEstimate::from_samples(&x_side);
    let mut sorted = x_side;
    sorted.sort_by(|a, b| a.total_cmp(b));
    let sup_op = family.sup_spectral_norm();
    let r = reps as f64;
    let mut out = GaussianComparison {
        t_grid: t_grid.to_vec(),
        empirical: Vec::new(),
        empirical_upper: Vec::new(),
        reference: Vec::new(),
        psi2_max,
        e_sup_ag,
        sup_op,
        multiplier: 0.0,
    };
    for &t in t_grid {
        let (point, upper) = if t == 0.0 {
            (x_mean.mean, x_mean.mean + Z95 * x_mean.stderr)
        } else {
            let q = -(-t).exp_m1();
            let k = ((q * r).floor() as usize).min(reps - 1);
            let k_hi = ((q * r + Z95 * (r * q * (1.0 - q)).sqrt()).ceil() as usize).min(reps - 1);
            (sorted[k], sorted[k_hi])
        };
        let reference = psi2_max * (e_sup_ag.mean + sup_op * t.sqrt());
        out.empirical.push(point);
        out.empirical_upper.push(upper);
        out.reference.push(reference);
        if reference > 0.0 {
            out.multiplier = out.multiplier.max(upper / reference);
        }
    }
    Ok(out)
}

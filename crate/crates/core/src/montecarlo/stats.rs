//! Interval estimates used by the replicate engine.

use statrs::function::beta::inv_beta_reg;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Exact binomial (Clopper-Pearson) interval for `successes` out of `trials`
/// at confidence `1 - alpha`.
pub fn clopper_pearson(successes: usize, trials: usize, alpha: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 { 0.0 } else { inv_beta_reg(k, n - k + 1.0, alpha / 2.0) };
    let hi = if successes == trials { 1.0 } else { inv_beta_reg(k + 1.0, n - k, 1.0 - alpha / 2.0) };
    (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
}

/// Sample mean and CLT standard error, accumulated in index order.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least-squares slope and intercept of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly).0
}

/// Least-squares comparison of a log-survival curve `y(t)` against one-regime and
/// quadratic-then-linear shapes, each with a free intercept.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CrossoverFit {
    pub sse_quadratic: f64,
    pub sse_linear: f64,
    pub sse_piecewise: f64,
    /// Crossover point of the best piecewise shape.
    pub tau: f64,
    /// `1 − SSE_piecewise / min(SSE_quadratic, SSE_linear)`.
    pub improvement: f64,
}

fn sse_affine(f: &[f64], y: &[f64]) -> f64 {
    let (slope, intercept) = ols(f, y);
    if !slope.is_finite() {
        let my = y.iter().sum::<f64>() / y.len() as f64;
        return y.iter().map(|v| (v - my) * (v - my)).sum();
    }
    f.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum()
}

/// Piecewise shape `g_τ(t) = t²` for `t ≤ τ` and `τ(2t − τ)` beyond, with `τ`
/// scanned over 400 points spanning the grid. Needs at least three points.
pub fn crossover_fit(t: &[f64], y: &[f64]) -> Option<CrossoverFit> {
    if t.len() < 3 || t.len() != y.len() {
        return None;
    }
    let sq: Vec<f64> = t.iter().map(|v| v * v).collect();
    let sse_quadratic = sse_affine(&sq, y);
    let sse_linear = sse_affine(t, y);
    let single = sse_quadratic.min(sse_linear);
    let (lo, hi) = (t[0], t[t.len() - 1]);
    let mut best = (single, hi);
    for k in 0..400 {
        let tau = lo + (hi - lo) * k as f64 / 399.0;
        let g: Vec<f64> = t.iter().map(|&x| if x <= tau { x * x } else { tau * (2.0 * x - tau) }).collect();
        let sse = sse_affine(&g, y);
        if sse < best.0 {
            best = (sse, tau);
        }
    }
    let improvement = if single > 0.0 { 1.0 - best.0 / single } else { 0.0 };
    Some(CrossoverFit { sse_quadratic, sse_linear, sse_piecewise: best.0, tau: best.1, improvement })
}

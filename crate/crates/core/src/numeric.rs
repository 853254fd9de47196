//! Compensated summation and log-domain helpers.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for Kahan {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = Kahan::new();
        for v in iter {
            k.add(v);
        }
        k
    }
}

pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<Kahan>().value()
}

/// `ln Σ p_k e^{v_k}`.
pub fn log_mean_exp(values: &[f64], probs: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + kahan_sum(values.iter().zip(probs).map(|(v, p)| p * (v - top).exp())).ln()
}

/// `e^r (r - 1) + 1`, nonnegative, accurate near zero.
pub fn xlogx_gap(r: f64) -> f64 {
    if r.abs() < 1e-3 {
        r * r * (0.5 + r * (1.0 / 3.0 + r * (0.125 + r / 30.0)))
    } else {
        (r * r.exp() - r.exp_m1()).max(0.0)
    }
}

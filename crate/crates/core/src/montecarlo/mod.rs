//! Seeded replicate engine.
//!
//! Replicate `r` of a run seeded by `rng` draws from `rng.substream(r)`. Replicates
//! execute on the rayon pool and are merged by index, so every statistic is a
//! deterministic function of `(seed, stream_id, reps)` regardless of worker count.

mod rng;
pub mod stats;

pub use rng::{mix, RngStream};
pub use stats::{clopper_pearson, crossover_fit, log_log_slope, mean_stderr, ols, CrossoverFit, Z95};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::ProductDistribution;
use crate::error::{input, Error, Result};

/// Mean with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(xs);
        MeanEstimate { mean, stderr, reps: xs.len() }
    }

    /// Symmetric 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z95 * self.stderr, self.mean + Z95 * self.stderr)
    }
}

/// Empirical survival function `P(Z ≥ t)` on a grid with Clopper-Pearson 95% bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub t_grid: Vec<f64>,
    pub point: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub counts: Vec<usize>,
    pub reps: usize,
}

impl TailEstimate {
    /// Builds the estimate from raw replicate values (any order).
    pub fn from_samples(samples: &[f64], t_grid: &[f64]) -> Result<Self> {
        check_grid(t_grid)?;
        if samples.is_empty() {
            return input("tail estimate needs at least one sample");
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let reps = sorted.len();
        let mut est = TailEstimate {
            t_grid: t_grid.to_vec(),
            point: Vec::with_capacity(t_grid.len()),
            ci_low: Vec::with_capacity(t_grid.len()),
            ci_high: Vec::with_capacity(t_grid.len()),
            counts: Vec::with_capacity(t_grid.len()),
            reps,
        };
        for &t in t_grid {
            let below = sorted.partition_point(|&z| z < t);
            let k = reps - below;
            let (lo, hi) = clopper_pearson(k, reps, 0.05);
            est.counts.push(k);
            est.point.push(k as f64 / reps as f64);
            est.ci_low.push(lo);
            est.ci_high.push(hi);
        }
        Ok(est)
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }
}

pub fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return input("grid must be nonempty");
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return input("grid must be finite and strictly increasing");
    }
    Ok(())
}

/// Runs `f` once per replicate on its own substream and returns the outputs in
/// replicate order.
pub fn replicate_with<T, F>(reps: usize, rng: &RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng.substream(r as u64);
            f(&mut stream)
        })
        .collect()
}

/// Replicates per chunk in [`replicate_sum`]; fixed so the summation tree does not
/// depend on the worker count.
const SUM_CHUNK: usize = 256;

/// Entrywise sum over replicates of a vector-valued evaluator writing into a
/// zeroed buffer of length `len`. Chunks are summed in replicate order and then
/// combined in chunk order.
pub fn replicate_sum<F>(reps: usize, len: usize, rng: &RngStream, f: F) -> Vec<f64>
where
    F: Fn(&mut RngStream, &mut [f64]) + Sync,
{
    let chunks = reps.div_ceil(SUM_CHUNK);
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![0.0; len];
            let mut buf = vec![0.0; len];
            for r in c * SUM_CHUNK..((c + 1) * SUM_CHUNK).min(reps) {
                buf.iter_mut().for_each(|b| *b = 0.0);
                let mut stream = rng.substream(r as u64);
                f(&mut stream, &mut buf);
                acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; len];
    for p in partial {
        total.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
    }
    total
}

/// Scalar replicates; a non-finite output is reported with the lowest failing index.
pub fn replicate<F>(reps: usize, rng: &RngStream, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    let values = replicate_with(reps, rng, f);
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Replicate { index, message: format!("evaluator returned {}", values[index]) });
    }
    Ok(values)
}

fn sample_values<F>(evaluator: F, dist: &ProductDistribution, reps: usize, rng: &RngStream) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    replicate(reps, rng, |stream| {
        let x = dist.sample(stream);
        evaluator(&x)
    })
}

/// Monte Carlo mean of `evaluator(X)` for `X ~ dist`.
pub fn estimate_mean<F>(evaluator: F, dist: &ProductDistribution, reps: usize, rng: &RngStream) -> Result<MeanEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if reps < 100 {
        return input("estimate_mean needs at least 100 replicates");
    }
    let values = sample_values(evaluator, dist, reps, rng)?;
    Ok(MeanEstimate::from_samples(&values))
}

/// Monte Carlo survival function of `evaluator(X)` on `t_grid`.
pub fn estimate_tail<F>(
    evaluator: F,
    dist: &ProductDistribution,
    t_grid: &[f64],
    reps: usize,
    rng: &RngStream,
) -> Result<TailEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if reps < 1000 {
        return input("estimate_tail needs at least 1000 replicates");
    }
    check_grid(t_grid)?;
    let values = sample_values(evaluator, dist, reps, rng)?;
    TailEstimate::from_samples(&values, t_grid)
}

/// Order statistic at index `floor(q * reps)` (clamped to the last sample).
pub fn quantile_of(samples: &[f64], q: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let idx = ((q * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    sorted[idx]
}

pub fn estimate_quantile<F>(evaluator: F, dist: &ProductDistribution, q: f64, reps: usize, rng: &RngStream) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(q > 0.0 && q < 1.0) {
        return input("quantile level must lie in (0, 1)");
    }
    if reps < 1000 {
        return input("estimate_quantile needs at least 1000 replicates");
    }
    let values = sample_values(evaluator, dist, reps, rng)?;
    Ok(quantile_of(&values, q))
}

/// Outcome of one lattice point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome<R> {
    pub index: usize,
    pub stream_id: u64,
    pub result: Result<R>,
}

/// Stream assigned to lattice point `index` of a sweep seeded by `seed`.
pub fn sweep_stream(seed: u64, index: usize) -> RngStream {
    RngStream::new(seed, mix(seed, index as u64))
}

/// Evaluates `runner` on every lattice point. Each point gets its own stream, so
/// execution order never affects a point's output, and a failing point does not
/// abort the others.
pub fn sweep<P, R, F>(lattice: &[P], seed: u64, runner: F) -> Vec<SweepOutcome<R>>
where
    P: Sync,
    R: Send,
    F: Fn(&P, &RngStream) -> Result<R> + Sync,
{
    lattice
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            let stream = sweep_stream(seed, index);
            SweepOutcome { index, stream_id: stream.stream_id(), result: runner(point, &stream) }
        })
        .collect()
}

#[cfg(test)]
mod tests;

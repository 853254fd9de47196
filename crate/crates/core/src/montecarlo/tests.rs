use super::*;
use crate::distributions::{CoordinateLaw, ProductDistribution};

fn rademacher(n: usize) -> ProductDistribution {
    ProductDistribution::iid(n, CoordinateLaw::Rademacher).unwrap()
}

#[test]
fn constant_evaluator_has_zero_stderr() {
    let est = estimate_mean(|_| 3.25, &rademacher(4), 500, &RngStream::new(1, 0)).unwrap();
    assert_eq!(est.mean, 3.25);
    assert_eq!(est.stderr, 0.0);
    assert_eq!(est.reps, 500);
}

#[test]
fn rademacher_sum_mean_is_near_zero() {
    let est = estimate_mean(|x| x.iter().sum(), &rademacher(8), 20_000, &RngStream::new(7, 3)).unwrap();
    assert!(est.mean.abs() <= 4.0 * est.stderr, "{est:?}");
    // Var(sum) = 8
    assert!((est.stderr * (20_000f64).sqrt() - 8f64.sqrt()).abs() < 0.1);
}

#[test]
fn too_few_replicates_are_rejected() {
    let d = rademacher(2);
    let rng = RngStream::new(0, 0);
    assert!(estimate_mean(|_| 0.0, &d, 99, &rng).is_err());
    assert!(estimate_tail(|_| 0.0, &d, &[0.0], 999, &rng).is_err());
    assert!(estimate_quantile(|_| 0.0, &d, 0.5, 999, &rng).is_err());
    assert!(estimate_quantile(|_| 0.0, &d, 1.0, 5000, &rng).is_err());
}

#[test]
fn bad_grids_are_rejected() {
    let d = rademacher(2);
    let rng = RngStream::new(0, 0);
    assert!(estimate_tail(|_| 0.0, &d, &[], 1000, &rng).is_err());
    assert!(estimate_tail(|_| 0.0, &d, &[1.0, 1.0], 1000, &rng).is_err());
    assert!(estimate_tail(|_| 0.0, &d, &[0.0, f64::NAN], 1000, &rng).is_err());
}

#[test]
fn tail_is_one_below_support_and_zero_above() {
    let t = estimate_tail(|x| x.iter().sum(), &rademacher(4), &[-5.0, 4.5], 2000, &RngStream::new(2, 2)).unwrap();
    assert_eq!(t.point, vec![1.0, 0.0]);
    assert_eq!(t.ci_high[1], clopper_pearson(0, 2000, 0.05).1);
}

#[test]
fn tail_matches_enumerated_probabilities() {
    let d = rademacher(6);
    let grid = [-2.0, 0.0, 2.0, 4.0, 6.0];
    let est = estimate_tail(|x| x.iter().sum(), &d, &grid, 40_000, &RngStream::new(11, 0)).unwrap();
    for (k, &t) in grid.iter().enumerate() {
        let mut exact = 0.0;
        d.for_each_atom(|x, p| {
            if x.iter().sum::<f64>() >= t {
                exact += p;
            }
        })
        .unwrap();
        assert!(est.ci_low[k] <= exact && exact <= est.ci_high[k], "t={t} exact={exact} est={est:?}");
    }
}

#[test]
fn quantile_of_rademacher_sum() {
    let d = rademacher(1);
    let q = estimate_quantile(|x| x[0], &d, 0.25, 4000, &RngStream::new(5, 5)).unwrap();
    assert_eq!(q, -1.0);
    let q = estimate_quantile(|x| x[0], &d, 0.75, 4000, &RngStream::new(5, 5)).unwrap();
    assert_eq!(q, 1.0);
}

#[test]
fn nonfinite_replicate_is_reported_with_index() {
    let rng = RngStream::new(3, 0);
    let err = replicate(50, &rng, |s| if s.stream_id() == rng.substream(17).stream_id() { f64::NAN } else { 1.0 }).unwrap_err();
    match err {
        Error::Replicate { index, .. } => assert_eq!(index, 17),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn clopper_pearson_interval_covers_at_nominal_rate() {
    let p = 0.1;
    let law = CoordinateLaw::FiniteSupport { atoms: vec![(0.0, 1.0 - p), (1.0, p)] };
    let d = ProductDistribution::iid(1, law).unwrap();
    let experiments = 500;
    let covered: usize = (0..experiments)
        .filter(|&e| {
            let est = estimate_tail(|x| x[0], &d, &[0.5], 1000, &RngStream::new(99, e as u64)).unwrap();
            est.ci_low[0] <= p && p <= est.ci_high[0]
        })
        .count();
    assert!(covered as f64 / experiments as f64 >= 0.93, "coverage {covered}/{experiments}");
}

#[test]
fn replicates_do_not_depend_on_worker_count() {
    let d = ProductDistribution::iid(5, CoordinateLaw::StandardGaussian).unwrap();
    let rng = RngStream::new(42, 1);
    let run = |workers: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        pool.install(|| replicate(3000, &rng, |s| d.sample(s).iter().map(|v| v * v).sum()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn sweep_is_deterministic_under_permuted_execution() {
    let lattice: Vec<usize> = (0..12).collect();
    let runner = |&p: &usize, rng: &RngStream| -> Result<f64> {
        let d = ProductDistribution::iid(p + 1, CoordinateLaw::StandardGaussian).unwrap();
        Ok(estimate_mean(|x| x.iter().sum(), &d, 200, rng)?.mean)
    };
    let forward = sweep(&lattice, 8, runner);
    // evaluate the points in reverse order, each on its assigned stream
    let mut reverse: Vec<(usize, f64)> =
        (0..lattice.len()).rev().map(|i| (i, runner(&lattice[i], &sweep_stream(8, i)).unwrap())).collect();
    reverse.sort_by_key(|r| r.0);
    for (out, (i, v)) in forward.iter().zip(reverse) {
        assert_eq!(out.index, i);
        assert_eq!(*out.result.as_ref().unwrap(), v);
    }
}

#[test]
fn sweep_keeps_going_after_a_failing_point() {
    let out = sweep(&[1.0, -1.0, 2.0], 0, |&p: &f64, _| if p < 0.0 { input("negative") } else { Ok(p) });
    assert!(out[0].result.is_ok() && out[1].result.is_err() && out[2].result.is_ok());
}

#[test]
fn replicate_sum_matches_sequential_and_ignores_workers() {
    let rng = RngStream::new(77, 0);
    let d = ProductDistribution::iid(3, CoordinateLaw::StandardGaussian).unwrap();
    let f = |s: &mut RngStream, out: &mut [f64]| {
        let x = d.sample(s);
        for i in 0..3 {
            out[i] = x[i] * x[i];
        }
    };
    let run = |workers: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        pool.install(|| replicate_sum(1000, 3, &rng, f))
    };
    let a = run(1);
    assert_eq!(a, run(5));
    let direct: Vec<f64> = (0..3)
        .map(|i| (0..1000).map(|r| d.sample(&mut rng.substream(r))[i].powi(2)).sum::<f64>())
        .collect();
    for i in 0..3 {
        assert!((a[i] - direct[i]).abs() < 1e-9 * direct[i]);
    }
}

use conclab_core::bounds::{fit_constant, hanson_wright_rhs, BoundParams, TailCurve};
use conclab_core::chaos::{mls_check, sup_norm_ax, ChaosProblem};
use conclab_core::distributions::{CoordinateLaw, ProductDistribution};
use conclab_core::fixtures::{random_family, random_symmetric};
use conclab_core::ising::{exact_distribution, glauber_sample, index_of, sweep_transition, IsingModel};
use conclab_core::montecarlo::{estimate_tail, RngStream};
use conclab_core::MatrixFamily;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn chaos_tail_is_independent_of_thread_count() {
    let family = random_family(3, 6, &mut RngStream::new(1, 0));
    let dist = ProductDistribution::iid(6, CoordinateLaw::StandardGaussian).unwrap();
    let grid: Vec<f64> = (0..12).map(|k| k as f64 * 0.75).collect();
    let run = || estimate_tail(|x| sup_norm_ax(&family, x).unwrap(), &dist, &grid, 4000, &RngStream::new(2, 5)).unwrap();
    let one = in_pool(1, run);
    let four = in_pool(4, run);
    assert_eq!(one, four);
    assert!(one.point.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(one.counts[0], 4000);
}

#[test]
fn fitted_hanson_wright_dominates_upper_band() {
    let a = random_symmetric(8, &mut RngStream::new(3, 0));
    let family = MatrixFamily::new(vec![a.clone()]).unwrap();
    let dist = ProductDistribution::iid(8, CoordinateLaw::Rademacher).unwrap();
    let problem = ChaosProblem::new(family, dist.clone()).unwrap();
    let centering = problem.centering()[0];
    let grid: Vec<f64> = (0..20).map(|k| k as f64).collect();
    let tail = estimate_tail(|x| (a.quad_form(x) - centering).abs(), &dist, &grid, 5000, &RngStream::new(4, 0)).unwrap();
    let upper = TailCurve::new(tail.t_grid.clone(), tail.ci_high.clone()).unwrap();
    let (hs, op) = (a.hs_norm(), a.spectral_norm());
    let k = 1.0 / 2f64.ln().sqrt();
    let rhs = |t: f64, c: f64| hanson_wright_rhs(t, k, hs, op, &BoundParams { c, ..BoundParams::default() });
    let fit = fit_constant(&upper, rhs).unwrap();
    assert!(fit.c > 0.0 && !fit.at_cap);
    for (&t, &u) in upper.t_grid.iter().zip(&upper.values) {
        assert!(rhs(t, fit.c).unwrap().value >= u);
    }
    assert!(upper.t_grid.iter().zip(&upper.values).any(|(&t, &u)| rhs(t, fit.c * 1.05).unwrap().value < u));
}

#[test]
fn mls_holds_on_random_families() {
    for seed in 0..5 {
        let family = random_family(3, 6, &mut RngStream::new(seed, 9));
        let dist = ProductDistribution::iid(6, CoordinateLaw::Rademacher).unwrap();
        let problem = ChaosProblem::new(family, dist).unwrap();
        for lambda in [0.1, 0.5, 1.0] {
            assert!(mls_check(&problem, lambda).unwrap() >= -1e-10);
        }
    }
}

#[test]
fn glauber_empirical_law_approaches_exact_gibbs_measure() {
    let model = IsingModel::curie_weiss(4, 0.5, 0.1).unwrap();
    let exact = exact_distribution(&model).unwrap();
    let swept = sweep_transition(&model, exact.probs()).unwrap();
    let drift = swept.iter().zip(exact.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-12);

    let samples = glauber_sample(&model, 200, 2, 40_000, &mut RngStream::new(6, 0)).unwrap();
    let mut counts = vec![0usize; 16];
    for s in &samples {
        counts[index_of(s)] += 1;
    }
    // expected sampling noise over 16 states at 4e4 samples is below 0.01
    assert!(exact.tv_to_counts(&counts) < 0.02);
}

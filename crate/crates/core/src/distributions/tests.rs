use super::*;
use crate::montecarlo::RngStream;
use proptest::prelude::*;

fn orlicz_moment(law: &CoordinateLaw, alpha: f64, t: f64) -> f64 {
    law.atoms().unwrap().iter().map(|&(v, p)| p * (v.abs() / t).powf(alpha).exp()).sum()
}

#[test]
fn gaussian_psi2_closed_form() {
    let v = psi_alpha_norm(&CoordinateLaw::StandardGaussian, 2.0).unwrap();
    assert!((v - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert!((v - 1.632_993).abs() < 1e-6);
}

#[test]
fn rademacher_psi2_closed_form() {
    let v = psi_alpha_norm(&CoordinateLaw::Rademacher, 2.0).unwrap();
    assert!((v - 1.0 / 2f64.ln().sqrt()).abs() < 1e-9, "{v}");
}

#[test]
fn gaussian_psi1_matches_independent_quadrature() {
    // E exp(|g|/t) = 2 e^{1/(2t²)} Φ(1/t)
    let moment = |t: f64| 2.0 * (0.5 / (t * t)).exp() * 0.5 * (1.0 + statrs::function::erf::erf(1.0 / t / 2f64.sqrt()));
    let v = psi_alpha_norm(&CoordinateLaw::StandardGaussian, 1.0).unwrap();
    assert!((moment(v) - 2.0).abs() < 1e-7, "{v} {}", moment(v));
}

#[test]
fn gaussian_psi_above_two_is_infinite() {
    assert!(matches!(psi_alpha_norm(&CoordinateLaw::StandardGaussian, 2.5), Err(Error::Domain(_))));
}

#[test]
fn psi_rejects_bad_inputs() {
    assert!(psi_alpha_norm(&CoordinateLaw::Rademacher, 0.5).is_err());
    assert!(psi_alpha_norm(&CoordinateLaw::CenteredBernoulli { delta: 1.5 }, 2.0).is_err());
}

#[test]
fn two_point_psi2_is_at_most_sqrt_two() {
    for r in [4.0, 6.0, 10.0, 20.0] {
        let v = psi_alpha_norm(&CoordinateLaw::TwoPointSymmetric { r }, 2.0).unwrap();
        assert!(v <= 2f64.sqrt(), "r={r} psi={v}");
    }
}

#[test]
fn bernoulli_psi2_closed_form_matches_exact_norm_up_to_constant() {
    for delta in [0.25, 0.1, 0.01] {
        let closed = bernoulli_psi2_squared(delta).unwrap();
        let exact = psi_alpha_norm(&CoordinateLaw::CenteredBernoulli { delta }, 2.0).unwrap().powi(2);
        let ratio = exact / closed;
        assert!((0.25..=4.0).contains(&ratio), "delta={delta} ratio={ratio}");
    }
    assert!((bernoulli_psi2_squared(0.25).unwrap() - 0.5 / (4.0 * 3f64.ln())).abs() < 1e-15);
    assert!((bernoulli_psi2_squared(0.25).unwrap() - 0.11380).abs() < 5e-5);
    let limit = bernoulli_psi2_squared(1e-6).unwrap() * 4.0 * 1e-6f64.ln().abs();
    assert!((limit - 1.0).abs() < 0.02, "{limit}");
    let grid: Vec<f64> = (1..=50).map(|k| 0.25 * k as f64 / 50.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&d| bernoulli_psi2_squared(d).unwrap()).collect();
    // the closed form increases with δ on (0, 1/4]
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
    assert!(bernoulli_psi2_squared(0.3).is_err());
    assert!(bernoulli_psi2_squared(0.0).is_err());
}

#[test]
fn counterexample_moments_match_enumeration() {
    for (r, n) in [(4.0, 1usize), (4.0, 3), (6.0, 4)] {
        let d = ProductDistribution::iid(n, CoordinateLaw::TwoPointSymmetric { r }).unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        d.for_each_atom(|x, p| {
            let m = x.iter().fold(0.0f64, |a, v| a.max(v * v));
            m1 += p * m;
            m2 += p * m * m;
        })
        .unwrap();
        let (l1, l2) = counterexample_max_moments(r, n).unwrap();
        assert!((l1 - m1).abs() < 1e-12 * m1.max(1.0), "{l1} {m1}");
        assert!((l2 - m2.sqrt()).abs() < 1e-12 * m2.max(1.0));
    }
}

#[test]
fn counterexample_single_variable_and_jensen() {
    for r in [4.0, 7.5, 20.0] {
        let p = (-r as f64).exp();
        let (l1, l2) = counterexample_max_moments(r, 1).unwrap();
        assert!((l1 - (r * p + 1.0 - p)).abs() < 1e-12);
        for n in [1, 10, 1000] {
            let (l1, l2n) = counterexample_max_moments(r, n).unwrap();
            assert!(l2n >= l1);
        }
        assert!(l2 >= l1);
    }
}

#[test]
fn counterexample_moments_match_monte_carlo() {
    for (k, (r, n)) in [(4.0, 10usize), (8.0, 10), (4.0, 100), (8.0, 100)].into_iter().enumerate() {
        let d = ProductDistribution::iid(n, CoordinateLaw::TwoPointSymmetric { r }).unwrap();
        let rng = RngStream::new(31, k as u64);
        let m = crate::montecarlo::replicate(100_000, &rng, |s| d.sample(s).iter().fold(0.0f64, |a, v| a.max(v * v))).unwrap();
        let (mean, se) = crate::montecarlo::mean_stderr(&m);
        let sq: Vec<f64> = m.iter().map(|v| v * v).collect();
        let (mean2, se2) = crate::montecarlo::mean_stderr(&sq);
        let (l1, l2) = counterexample_max_moments(r, n).unwrap();
        assert!((mean - l1).abs() <= 3.0 * se + 1e-12, "r={r} n={n}: {mean} vs {l1} (se {se})");
        assert!((mean2 - l2 * l2).abs() <= 3.0 * se2 + 1e-12);
    }
}

#[test]
fn samples_stay_in_support() {
    let mut rng = RngStream::new(3, 3);
    let d = ProductDistribution::iid(3, CoordinateLaw::Rademacher).unwrap();
    for _ in 0..100 {
        assert!(d.sample(&mut rng).iter().all(|v| *v == 1.0 || *v == -1.0));
    }
    let d = ProductDistribution::iid(4, CoordinateLaw::CenteredBernoulli { delta: 0.3 }).unwrap();
    for _ in 0..100 {
        assert!(d.sample(&mut rng).iter().all(|v| *v == -0.3 || *v == 0.7));
    }
}

#[test]
fn enumeration_examples() {
    let point = ProductDistribution::iid(5, CoordinateLaw::FiniteSupport { atoms: vec![(0.0, 1.0)] }).unwrap();
    assert_eq!(point.enumerate_support().unwrap(), vec![(vec![0.0; 5], 1.0)]);
    let d = ProductDistribution::iid(3, CoordinateLaw::CenteredBernoulli { delta: 0.3 }).unwrap();
    let atoms = d.enumerate_support().unwrap();
    assert_eq!(atoms.len(), 8);
    for (x, p) in atoms {
        let direct: f64 = x.iter().map(|&v| if v > 0.0 { 0.3 } else { 0.7 }).product();
        assert!((p - direct).abs() < 1e-15);
    }
    assert_eq!(psi_alpha_norm(&CoordinateLaw::FiniteSupport { atoms: vec![(0.0, 1.0)] }, 2.0).unwrap(), 0.0);
}

#[test]
fn counterexample_ratio_grows_at_critical_n() {
    let r: f64 = 20.0;
    let n = r.exp().round() as usize;
    let (l1, l2) = counterexample_max_moments(r, n).unwrap();
    assert!(l2 / l1 > r.sqrt() / 4.0, "{}", l2 / l1);
    assert!(counterexample_max_moments(3.0, 10).is_err());
}

#[test]
fn tail_regularity_examples() {
    assert!(tail_regularity_violation(20.0, 2.0).unwrap());
    assert!(tail_regularity_violation(20.0, 1.0 + 1e-9).unwrap());
    assert!(tail_regularity_violation(4.0, 1.0).is_err());
    let atoms: Vec<(f64, f64)> = {
        let w: Vec<f64> = (1..=6).map(|k| 2f64.powi(-(k * k))).collect();
        let total: f64 = w.iter().sum::<f64>() * 2.0;
        (1..=6).flat_map(|k| [(-(k as f64), w[k - 1] / total), (k as f64, w[k - 1] / total)]).collect()
    };
    let law = CoordinateLaw::FiniteSupport { atoms };
    assert!(tail_regularity_witness(&law, 1000.0).unwrap().is_none());
}

#[test]
fn tail_regularity_witness_is_a_true_violation() {
    let law = CoordinateLaw::TwoPointSymmetric { r: 9.0 };
    let t = tail_regularity_witness(&law, 3.0).unwrap().unwrap();
    let atoms = law.atoms().unwrap();
    let s = |u: f64| -> f64 { atoms.iter().filter(|a| a.0 * a.0 > u).map(|a| a.1).sum() };
    assert!(t >= law.abs_mean());
    assert!(s(3.0 * t) > s(t) / 3.0);
}

#[test]
fn moments_of_laws() {
    let b = CoordinateLaw::CenteredBernoulli { delta: 0.2 };
    assert!(b.mean().abs() < 1e-15);
    assert!((b.variance() - 0.16).abs() < 1e-15);
    let tp = CoordinateLaw::TwoPointSymmetric { r: 5.0 };
    let p = (-5f64).exp();
    assert!((tp.second_moment() - (1.0 - p + 5.0 * p)).abs() < 1e-15);
    assert!(tp.is_symmetric());
    assert!(!b.is_symmetric());
    assert!(CoordinateLaw::StandardGaussian.is_symmetric());
}

#[test]
fn sample_moments_agree_with_exact() {
    let laws = [
        CoordinateLaw::Rademacher,
        CoordinateLaw::StandardGaussian,
        CoordinateLaw::CenteredBernoulli { delta: 0.3 },
        CoordinateLaw::TwoPointSymmetric { r: 4.0 },
        CoordinateLaw::FiniteSupport { atoms: vec![(-2.0, 0.25), (0.0, 0.25), (1.0, 0.5)] },
    ];
    for law in &laws {
        let mut rng = RngStream::new(17, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        let (m, se) = crate::montecarlo::mean_stderr(&xs);
        assert!((m - law.mean()).abs() < 5.0 * se, "{law:?}");
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (m2, se2) = crate::montecarlo::mean_stderr(&sq);
        assert!((m2 - law.second_moment()).abs() <= 5.0 * se2 + 1e-12, "{law:?}");
    }
}

#[test]
fn enumeration_cap_and_order() {
    let d = ProductDistribution::iid(2, CoordinateLaw::Rademacher).unwrap();
    let atoms = d.enumerate_support().unwrap();
    let xs: Vec<Vec<f64>> = atoms.iter().map(|a| a.0.clone()).collect();
    assert_eq!(xs, vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]]);
    assert!(atoms.iter().all(|a| a.1 == 0.25));
    let big = ProductDistribution::iid(21, CoordinateLaw::Rademacher).unwrap();
    assert!(matches!(big.enumerate_support(), Err(Error::Capacity(_))));
    let g = ProductDistribution::iid(2, CoordinateLaw::StandardGaussian).unwrap();
    assert!(matches!(g.for_each_atom(|_, _| {}), Err(Error::Capacity(_))));
}

#[test]
fn invalid_laws_are_rejected() {
    assert!(ProductDistribution::iid(0, CoordinateLaw::Rademacher).is_err());
    assert!(ProductDistribution::iid(2, CoordinateLaw::TwoPointSymmetric { r: 3.0 }).is_err());
    assert!(ProductDistribution::iid(2, CoordinateLaw::FiniteSupport { atoms: vec![(1.0, 0.4)] }).is_err());
    assert!(ProductDistribution::independent(vec![]).is_err());
}

#[test]
fn config_round_trip() {
    let law: CoordinateLaw = serde_json::from_str(r#"{"kind":"centered_bernoulli","delta":0.1}"#).unwrap();
    assert_eq!(law, CoordinateLaw::CenteredBernoulli { delta: 0.1 });
    let law: CoordinateLaw = serde_json::from_str(r#"{"kind":"finite_support","atoms":[[-1.0,0.5],[1.0,0.5]]}"#).unwrap();
    assert_eq!(law.atoms().unwrap().len(), 2);
    let d = ProductDistribution::independent(vec![CoordinateLaw::Rademacher, CoordinateLaw::StandardGaussian]).unwrap();
    let back: ProductDistribution = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
    assert_eq!(back, d);
}

fn finite_law() -> impl Strategy<Value = CoordinateLaw> {
    prop_oneof![
        Just(CoordinateLaw::Rademacher),
        (0.01f64..0.99).prop_map(|delta| CoordinateLaw::CenteredBernoulli { delta }),
        (4.0f64..30.0).prop_map(|r| CoordinateLaw::TwoPointSymmetric { r }),
        prop::collection::vec((-5.0f64..5.0, 0.05f64..1.0), 1..6).prop_map(|raw| {
            let total: f64 = raw.iter().map(|a| a.1).sum();
            let mut atoms: Vec<(f64, f64)> = raw.iter().map(|&(v, w)| (v, w / total)).collect();
            let s: f64 = atoms.iter().map(|a| a.1).sum();
            atoms[0].1 += 1.0 - s;
            CoordinateLaw::FiniteSupport { atoms }
        }),
    ]
}

proptest! {
    #[test]
    fn psi_norm_solves_the_orlicz_equation(law in finite_law(), alpha in 1.0f64..3.0) {
        let t = psi_alpha_norm(&law, alpha).unwrap();
        prop_assume!(t > 0.0);
        let m = orlicz_moment(&law, alpha, t);
        prop_assert!((m - 2.0).abs() <= 1e-8, "moment {} at t={}", m, t);
    }

    #[test]
    fn psi_norm_is_homogeneous(law in finite_law(), c in 0.1f64..10.0) {
        let t = psi_alpha_norm(&law, 2.0).unwrap();
        let s = psi_alpha_norm(&law.scaled(c).unwrap(), 2.0).unwrap();
        prop_assert!((s - c * t).abs() <= 1e-9 * (1.0 + c * t));
    }

    #[test]
    fn enumerated_probabilities_sum_to_one(n in 1usize..8, delta in 0.05f64..0.95) {
        let d = ProductDistribution::iid(n, CoordinateLaw::CenteredBernoulli { delta }).unwrap();
        let mut total = 0.0;
        d.for_each_atom(|_, p| total += p).unwrap();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}

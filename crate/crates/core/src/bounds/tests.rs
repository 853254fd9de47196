use super::*;
use proptest::prelude::*;

fn p() -> BoundParams<f64> {
    BoundParams::default()
}

#[test]
fn hanson_wright_examples() {
    assert_eq!(hanson_wright_rhs(0.0, 1.0, 2.0, 1.0, &p()).unwrap().value, 1.0);
    // t small: quadratic branch
    let (k, hs, op, t) = (1.2f64, 3.0, 1.0, 0.5);
    let v = hanson_wright_rhs(t, k, hs, op, &p()).unwrap().value;
    assert!((v - (2.0 * (-t * t / (k.powi(4) * hs * hs)).exp()).min(1.0)).abs() < 1e-15);
    let big = 40.0;
    let v = hanson_wright_rhs(big, k, hs, op, &p()).unwrap().value;
    assert!((v - 2.0 * (-big / (k * k * op)).exp()).abs() < 1e-15);
    let crossover = k * k * hs * hs / op;
    let quad = 2.0 * (-crossover * crossover / (k.powi(4) * hs * hs)).exp();
    let lin = 2.0 * (-crossover / (k * k * op)).exp();
    assert!((quad - lin).abs() < 1e-12 * quad);
    assert!(hanson_wright_rhs(1.0, 0.0, 1.0, 1.0, &p()).is_err());
    assert!(hanson_wright_rhs(-1.0, 1.0, 1.0, 1.0, &p()).is_err());
}

#[test]
fn zero_deviation_clamps_to_one() {
    assert_eq!(talagrand_rhs(0.0, 2.0, 1.0, &p()).unwrap().value, 1.0);
    assert_eq!(adamczak_rhs(0.0, 3.0, 2.0, 1.0, &p()).unwrap().value, 1.0);
    assert_eq!(grad_trunc_rhs(0.0, 2.0, 0.5, &p()).unwrap().value, 1.0);
    assert_eq!(ising_rhs(0.0, 2.0, 1.0, &p()).unwrap().value, 1.0);
    assert_eq!(adam08_rhs(0.0, 1.0, 1.0, 1.0, &p()).unwrap().value, 1.0);
    assert_eq!(mainthm_rhs(0.0, 1.0, 1.0, 1.0, &p()).unwrap().value, 1.0);
    assert_eq!(mainthm2_rhs(0.0, 1.0, 1.0, 1.0, 1.0, &p()).unwrap().value, 1.0);
}

#[test]
fn adamczak_with_unit_k_is_talagrand() {
    for t in [0.1, 1.0, 5.0, 30.0] {
        assert_eq!(adamczak_rhs(t, 1.0, 2.0, 0.7, &p()).unwrap(), talagrand_rhs(t, 2.0, 0.7, &p()).unwrap());
    }
    let grid: Vec<f64> = (1..50).map(|i| i as f64 * 0.5).collect();
    for &t in &grid {
        let small = adamczak_rhs(t, 1.0, 2.0, 0.7, &p()).unwrap().value;
        let large = adamczak_rhs(t, 2.0, 2.0, 0.7, &p()).unwrap().value;
        assert!(large >= small);
    }
}

#[test]
fn mainthm_validity_threshold() {
    let (m, e, op) = (1.5f64, 4.0f64, 2.0f64);
    let threshold = (m * e).max(m * m * op);
    assert!(!mainthm_rhs(threshold * 0.99, m, e, op, &p()).unwrap().valid);
    assert!(mainthm_rhs(threshold, m, e, op, &p()).unwrap().valid);
    let threshold2 = (m * 2.0 * e).max(m * 2.0 * op);
    assert!(!mainthm2_rhs(threshold2 * 0.99, m, 2.0, e, op, &p()).unwrap().valid);
    assert!(mainthm2_rhs(threshold2, m, 2.0, e, op, &p()).unwrap().valid);
    let scaled = BoundParams { validity_threshold: Some(2.0), ..p() };
    assert!(!mainthm_rhs(threshold * 1.5, m, e, op, &scaled).unwrap().valid);
}

#[test]
fn grad_trunc_without_theta_is_gaussian() {
    let v = grad_trunc_rhs(3.0, 2.0, 0.0, &p()).unwrap();
    assert!((v.value - (-9.0f64 / 2.0).exp()).abs() < 1e-15);
    let (l, th) = (1.0f64, 0.25f64);
    // crossover where t²/(L+θ) = t/√θ
    let t = (l + th) / th.sqrt();
    let a = (-t * t / (l + th)).exp();
    let b = (-t / th.sqrt()).exp();
    assert!((a - b).abs() < 1e-14);
    assert!((grad_trunc_rhs(t, l, th, &p()).unwrap().value - a).abs() < 1e-14);
}

#[test]
fn improved_bernoulli_arithmetic() {
    let delta = 0.25f64;
    let n = std::f64::consts::E;
    let (s, m) = improved_bernoulli_scales(delta, n).unwrap();
    let ld = 4f64.ln();
    assert!((s - (delta / ld).sqrt()).abs() < 1e-15);
    assert!((m - 1.0 / ld).abs() < 1e-15);
    for &d in &[0.5f64, 0.1, 1e-3, 1e-8] {
        for &nn in &[2.0, 100.0, 1e6] {
            assert!(improved_bernoulli_scales(d, nn).unwrap().0 <= d.sqrt());
        }
    }
    // subgaussian regime: the variance proxy s² beats K⁴ from the Bernoulli ψ₂ norm,
    // so the bound sits below Hanson-Wright
    for d in [1e-3f64, 1e-4, 1e-6] {
        let k2 = crate::distributions::bernoulli_psi2_squared(d).unwrap();
        for n in [10.0f64, 100.0] {
            let (s, m) = improved_bernoulli_scales(d, n).unwrap();
            assert!(s * s <= k2 * k2, "delta={d} n={n}");
            for frac in [0.1, 0.5, 1.0] {
                let t = frac * s * s / m;
                let hw = hanson_wright_rhs(t, k2.sqrt(), 1.0, 1.0, &p()).unwrap().value;
                let ib = improved_bernoulli_rhs(t, d, n, 1.0, 1.0, &p()).unwrap().value;
                assert!(ib <= hw, "delta={d} n={n} t={t}: {ib} vs {hw}");
            }
        }
    }
    assert!(improved_bernoulli_rhs(1.0, 0.0, 10.0, 1.0, 1.0, &p()).is_err());
    assert!(improved_bernoulli_rhs(1.0, 0.1, 1.0, 1.0, 1.0, &p()).is_err());
}

#[test]
fn bernstein_examples() {
    let params = p();
    let r1 = bernstein_rhs(2.0, 1.0, 1.0, 1.0, &params).unwrap();
    assert!((r1.value - (-2.0f64).exp()).abs() < 1e-15);
    let r4 = bernstein_rhs(2.0, 1.0, 1.0, 4.0, &params).unwrap();
    assert!((r4.value - 4.0 * r1.value).abs() < 1e-15);
    // linear regime: log-value is linear in u
    let a = bernstein_rhs(10.0, 1.0, 1.0, 1.0, &params).unwrap().log_value;
    let b = bernstein_rhs(20.0, 1.0, 1.0, 1.0, &params).unwrap().log_value;
    assert!((b - 2.0 * a).abs() < 1e-12);
    assert!(bernstein_rhs(0.5, 1.0, 1.0, 8.0, &params).unwrap().value > 1.0);
    assert!(!bernstein_rhs(0.5, 1.0, 1.0, 1.0, &params).unwrap().valid);
    assert!(bernstein_rhs(1.0, 1.0, 1.0, 1.0, &params).unwrap().valid);
}

#[test]
fn missing_cov_examples() {
    let full = missing_cov_rhs(1.0, 2.0, 4.0, 100.0, 1.0, &p()).unwrap().value;
    let terms = missing_cov_terms(1.0f64, 4.0, 100.0, 1.0).unwrap();
    assert!((full - 2.0 * terms.iter().fold(0.0f64, |m, v| m.max(*v))).abs() < 1e-15);
    let t4 = missing_cov_terms(1.0f64, 4.0, 400.0, 0.5).unwrap();
    let t1 = missing_cov_terms(1.0f64, 4.0, 100.0, 0.5).unwrap();
    assert!((t4[0] - t1[0] / 2.0).abs() < 1e-15 && (t4[1] - t1[1] / 2.0).abs() < 1e-15);
    // for large N the √ terms dominate, for small N the third term does
    let dominant = |n: f64| {
        let t = missing_cov_terms(0.5f64, 4.0, n, 1.0).unwrap();
        (0..3).max_by(|&a, &b| t[a].total_cmp(&t[b])).unwrap()
    };
    assert_eq!(dominant(10.0), 2);
    assert!(dominant(1e9) != 2);
}

#[test]
fn adam08_branches() {
    let tiny_psi = adam08_rhs(30.0, 1.0, 1.0, 1.0, &p()).unwrap();
    assert!((tiny_psi.value - 3.0 * (-30.0f64).exp()).abs() < 1e-3 * tiny_psi.value);
    let v = adam08_rhs(2.0, 1.0, 1.0, 1.0, &p()).unwrap();
    assert!((v.value - ((-1.0f64).exp() + 3.0 * (-2.0f64).exp()).min(1.0)).abs() < 1e-15);
}

#[test]
fn log_domain_survives_underflow() {
    let v = hanson_wright_rhs(1e5, 1.0, 1.0, 1.0, &p()).unwrap();
    assert_eq!(v.value, 0.0);
    assert!((v.log_value - (2f64.ln() - 1e5)).abs() < 1e-9);
}

#[test]
fn f32_evaluators_agree_with_f64() {
    let a = hanson_wright_rhs(3.0f32, 1.0, 2.0, 1.5, &BoundParams::default()).unwrap().value;
    let b = hanson_wright_rhs(3.0f64, 1.0, 2.0, 1.5, &p()).unwrap().value;
    assert!((a as f64 - b).abs() < 1e-6);
}

#[test]
fn fit_constant_examples() {
    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
    let rhs = |t: f64, c: f64| hanson_wright_rhs(t, 1.0, 2.0, 1.0, &BoundParams::with_c(c));
    let zero = TailCurve::new(grid.clone(), vec![0.0; grid.len()]).unwrap();
    let fit = fit_constant(&zero, rhs).unwrap();
    assert!(fit.at_cap && fit.c == FIT_MAX);
    let synthetic: Vec<f64> = grid.iter().map(|&t| rhs(t, 0.5).unwrap().value).collect();
    let fit = fit_constant(&TailCurve::new(grid.clone(), synthetic).unwrap(), rhs).unwrap();
    assert!((fit.c - 0.5).abs() < 1e-3 * 0.5, "{fit:?}");
    let ones = TailCurve::new(grid.clone(), vec![1.0; grid.len()]).unwrap();
    let no_prefactor = |t: f64, c: f64| grad_trunc_rhs(t, 1.0, 0.5, &BoundParams::with_c(c));
    assert!(matches!(fit_constant(&ones, no_prefactor), Err(Error::FitFailure(_))));
}

#[test]
fn fit_ignores_invalid_points() {
    let grid = vec![0.5, 1.0, 20.0, 30.0];
    let rhs = |t: f64, c: f64| mainthm_rhs(t, 1.0, 2.0, 1.0, &BoundParams::with_c(c));
    // huge values below the threshold t = 2 do not matter
    let curve = TailCurve::new(grid, vec![1.0, 1.0, 1e-9, 1e-13]).unwrap();
    let fit = fit_constant(&curve, rhs).unwrap();
    assert_eq!(fit.valid_points, 2);
    assert!(fit.c > 0.5);
    let none = TailCurve::new(vec![0.5], vec![0.1]).unwrap();
    assert!(fit_constant(&none, rhs).is_err());
}

#[test]
fn csv_export() {
    let grid = [0.0, 1.0];
    let vals: Vec<BoundValue<f64>> = grid.iter().map(|&t| mainthm_rhs(t, 1.0, 1.0, 1.0, &p()).unwrap()).collect();
    let csv = curve_csv(&grid, &vals);
    assert_eq!(csv.lines().next(), Some("t,rhs,valid"));
    assert_eq!(csv.lines().nth(1), Some("0,1,false"));
    assert!(csv.lines().nth(2).unwrap().ends_with(",true"));
}

#[test]
fn params_round_trip_and_validate() {
    let params: BoundParams<f64> = serde_json::from_str(r#"{"c": 0.5, "C": 2.0}"#).unwrap();
    assert_eq!(params.c1, 1.0);
    assert_eq!(params.big_c, 2.0);
    assert!(BoundParams::with_c(0.0).validate().is_err());
    assert!(TailCurve::new(vec![1.0, 1.0], vec![0.1, 0.1]).is_err());
    assert!(TailCurve::new(vec![1.0], vec![1.5]).is_err());
}

type Eval = fn(f64, f64) -> f64;

fn probability_bounds() -> Vec<(&'static str, Eval)> {
    vec![
        ("hanson_wright", |t, c| hanson_wright_rhs(t, 1.3, 2.0, 0.8, &BoundParams::with_c(c)).unwrap().value),
        ("talagrand", |t, c| talagrand_rhs(t, 2.5, 0.8, &BoundParams::with_c(c)).unwrap().value),
        ("adamczak", |t, c| adamczak_rhs(t, 1.7, 2.5, 0.8, &BoundParams::with_c(c)).unwrap().value),
        ("mainthm", |t, c| mainthm_rhs(t, 1.7, 2.5, 0.8, &BoundParams::with_c(c)).unwrap().value),
        ("mainthm2", |t, c| mainthm2_rhs(t, 1.7, 1.2, 2.5, 0.8, &BoundParams::with_c(c)).unwrap().value),
        ("grad_trunc", |t, c| grad_trunc_rhs(t, 2.0, 0.3, &BoundParams::with_c(c)).unwrap().value),
        ("improved_bernoulli", |t, c| improved_bernoulli_rhs(t, 0.01, 50.0, 2.0, 0.8, &BoundParams::with_c(c)).unwrap().value),
        ("ising", |t, c| ising_rhs(t, 2.5, 0.8, &BoundParams { big_c: c, ..BoundParams::default() }).unwrap().value),
        ("adam08", |t, c| adam08_rhs(t, 1.0, 2.0, 0.8, &BoundParams { big_c: c, ..BoundParams::default() }).unwrap().value),
        ("bernstein", |t, c| bernstein_rhs(t, 2.0, 0.8, 3.0, &BoundParams::with_c(c)).unwrap().value),
    ]
}

#[test]
fn all_bounds_monotone_and_continuous_on_dense_grid() {
    for (name, f) in probability_bounds() {
        let mut prev = f(0.0, 1.0);
        for k in 1..=20_000 {
            let t = k as f64 * 1e-3;
            let v = f(t, 1.0);
            assert!(v <= prev + 1e-15, "{name} increases at t={t}");
            // no jumps: neighbouring values differ by at most the local Lipschitz scale
            assert!(prev - v <= 1e-2, "{name} jumps at t={t}");
            prev = v;
        }
    }
}

proptest! {
    #[test]
    fn bounds_are_probabilities_and_nonincreasing(t in 0.0f64..50.0, dt in 0.0f64..5.0, c in 0.01f64..5.0) {
        for (name, f) in probability_bounds() {
            let (a, b) = (f(t, c), f(t + dt, c));
            prop_assert!(b <= a + 1e-15, "{}", name);
            if name != "bernstein" {
                prop_assert!((0.0..=1.0).contains(&a), "{}", name);
            }
        }
    }

    #[test]
    fn crossover_continuity(k in 0.5f64..2.0, hs in 0.5f64..5.0, op in 0.1f64..1.0) {
        let t = k * k * hs * hs / op;
        let params = BoundParams::default();
        let left = hanson_wright_rhs(t * (1.0 - 1e-12), k, hs, op, &params).unwrap().log_value;
        let right = hanson_wright_rhs(t * (1.0 + 1e-12), k, hs, op, &params).unwrap().log_value;
        prop_assert!((left - right).abs() <= 1e-9 * left.abs().max(1.0));
    }

    #[test]
    fn mainthm_flag_is_monotone(m in 0.5f64..3.0, e in 0.1f64..5.0, op in 0.1f64..3.0, t in 0.0f64..40.0, dt in 0.0f64..10.0) {
        let params = BoundParams::default();
        if mainthm_rhs(t, m, e, op, &params).unwrap().valid {
            prop_assert!(mainthm_rhs(t + dt, m, e, op, &params).unwrap().valid);
        }
    }

    #[test]
    fn fit_round_trips(c0 in 0.01f64..50.0) {
        let grid: Vec<f64> = (1..=15).map(|i| i as f64).collect();
        let rhs = |t: f64, c: f64| talagrand_rhs(t, 3.0, 1.0, &BoundParams::with_c(c));
        let values: Vec<f64> = grid.iter().map(|&t| rhs(t, c0).unwrap().value).collect();
        prop_assume!(values.iter().any(|v| *v < 1.0));
        let fit = fit_constant(&TailCurve::new(grid, values).unwrap(), rhs).unwrap();
        prop_assert!((fit.c - c0).abs() <= 1e-3 * c0);
    }
}

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::Error;

fn random_sym(n: usize, seed: u64) -> SymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymMatrix::from_upper_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_psd(n: usize, rank: usize, seed: u64) -> SymMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = SymMatrix::zeros(n);
    for _ in 0..rank {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        m.add_outer(&v, 1.0);
    }
    m
}

#[test]
fn spectral_norm_examples() {
    assert_abs_diff_eq!(SymMatrix::<f64>::identity(5).spectral_norm(), 1.0, epsilon = 1e-15);
    let d = SymMatrix::from_diag(&[1.0, -3.0, 2.0]);
    assert_abs_diff_eq!(d.spectral_norm(), 3.0, epsilon = 1e-15);
    assert_eq!(SymMatrix::<f64>::zeros(4).spectral_norm(), 0.0);
}

#[test]
fn spectral_norm_matches_jacobi_oracle() {
    for seed in 0..20 {
        let a = random_sym(6, seed);
        let oracle = a.eigen().values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert_abs_diff_eq!(a.spectral_norm(), oracle, epsilon = 1e-9);
    }
}

#[test]
fn tridiagonal_and_jacobi_agree_on_all_eigenvalues() {
    for (n, seed) in [(1, 1), (2, 2), (7, 3), (16, 4), (33, 5), (64, 6)] {
        let a = random_sym(n, seed);
        let ql = a.eigenvalues();
        let jac = a.eigen().values;
        for (x, y) in ql.iter().zip(&jac) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10 * a.hs_norm().max(1.0));
        }
    }
}

#[test]
fn jacobi_reconstructs_matrix() {
    let a = random_sym(9, 11);
    let e = a.eigen();
    let n = 9;
    let rebuilt = SymMatrix::from_upper_fn(n, |i, j| {
        (0..n).map(|k| e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k]).sum()
    });
    assert!(rebuilt.max_abs_diff(&a) < 1e-12);
}

#[test]
fn degenerate_spectra() {
    // repeated eigenvalues and an already-diagonal input
    let a = SymMatrix::from_diag(&[2.0, 2.0, 2.0, -1.0]);
    assert_eq!(a.eigenvalues(), vec![-1.0, 2.0, 2.0, 2.0]);
    let ones = SymMatrix::<f64>::ones(5);
    let ev = ones.eigenvalues();
    assert_abs_diff_eq!(ev[4], 5.0, epsilon = 1e-12);
    assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
}

#[test]
fn hs_norm_examples() {
    assert_abs_diff_eq!(SymMatrix::<f64>::identity(4).hs_norm(), 2.0);
    assert_eq!(SymMatrix::<f64>::zeros(3).hs_norm(), 0.0);
    // direct summation: nine unit entries
    let ones = SymMatrix::<f64>::ones(3);
    let direct: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| ones.get(i, j).powi(2)).sum();
    assert_abs_diff_eq!(ones.hs_norm(), direct.sqrt());
    assert_abs_diff_eq!(ones.hs_norm(), 3.0);
}

#[test]
fn diag_off_split() {
    let id = SymMatrix::<f64>::identity(3);
    assert_eq!(id.diag_part(), id);
    assert_eq!(id.off_part(), SymMatrix::zeros(3));
    let a = random_sym(7, 3);
    let back = a.diag_part().add(&a.off_part()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn effective_rank_examples() {
    assert_abs_diff_eq!(SymMatrix::<f64>::identity(7).effective_rank().unwrap(), 7.0);
    assert_abs_diff_eq!(SymMatrix::from_diag(&[2.0, 1.0, 1.0]).effective_rank().unwrap(), 2.0);
    assert_abs_diff_eq!(SymMatrix::from_diag(&[1.0, 0.0, 0.0, 0.0]).effective_rank().unwrap(), 1.0);
    assert!(matches!(SymMatrix::<f64>::zeros(3).effective_rank(), Err(Error::Domain(_))));
    assert!(matches!(SymMatrix::from_diag(&[1.0, -0.5]).effective_rank(), Err(Error::Domain(_))));
}

#[test]
fn hadamard_examples() {
    let a = random_sym(5, 8);
    assert_eq!(a.hadamard(&SymMatrix::ones(5)).unwrap(), a);
    assert_eq!(a.hadamard(&SymMatrix::identity(5)).unwrap(), a.diag_part());
    let b = random_sym(5, 9);
    let h = a.hadamard(&b).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(h.get(i, j), a.get(i, j) * b.get(i, j));
        }
    }
    assert!(matches!(a.hadamard(&SymMatrix::identity(4)), Err(Error::Input(_))));
}

#[test]
fn psd_leq_examples() {
    let z = SymMatrix::<f64>::zeros(3);
    let id = SymMatrix::<f64>::identity(3);
    assert!(z.psd_leq(&id, 0.0).unwrap());
    assert!(!id.psd_leq(&z, 0.0).unwrap());
    let a = random_sym(4, 1);
    assert!(a.psd_leq(&a, 0.0).unwrap());
    assert!(matches!(a.psd_leq(&id, 0.0), Err(Error::Input(_))));
    assert!(matches!(a.psd_leq(&a, -1.0), Err(Error::Input(_))));
}

#[test]
fn construction_validates_and_symmetrizes() {
    assert!(matches!(SymMatrix::from_row_major(2, vec![1.0, f64::NAN, 0.0, 1.0]), Err(Error::Input(_))));
    assert!(matches!(SymMatrix::<f64>::from_row_major(2, vec![1.0; 3]), Err(Error::Input(_))));
    assert!(matches!(SymMatrix::<f64>::from_row_major(0, vec![]), Err(Error::Input(_))));
    let (m, asym) = SymMatrix::from_row_major_checked(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
    assert_eq!(asym, 2.0);
    assert_eq!(m.get(0, 1), 3.0);
    assert_eq!(m.get(1, 0), 3.0);
}

#[test]
fn sqrt_psd_squares_back() {
    let a = random_psd(6, 3, 17);
    let r = a.sqrt_psd().unwrap();
    assert!(r.square().max_abs_diff(&a) < 1e-10 * a.spectral_norm());
}

#[test]
fn text_fixture_round_trip_and_errors() {
    let a = random_sym(4, 21);
    let text = format_matrix_text(&a);
    let b: SymMatrix<f64> = parse_matrix_text(&text).unwrap();
    assert_eq!(a, b);
    assert!(parse_matrix_text::<f64>("2\n1 0\n").is_err());
    assert!(parse_matrix_text::<f64>("2\n1 0 3\n0 1\n").is_err());
    assert!(parse_matrix_text::<f64>("x\n").is_err());
    assert!(parse_matrix_text::<f64>("1\nfoo\n").is_err());
}

#[test]
fn works_in_single_precision() {
    let a = SymMatrix::<f32>::from_diag(&[1.0, -3.0, 2.0]);
    assert!((a.spectral_norm() - 3.0).abs() < 1e-6);
    let b = random_sym(8, 5);
    let b32: SymMatrix<f32> = b.cast();
    assert!((b32.spectral_norm() as f64 - b.spectral_norm()).abs() < 1e-5);
    assert!((b32.eigen().values[0] as f64 - b.eigen().values[0]).abs() < 1e-5);
}

#[test]
fn family_validation() {
    assert!(MatrixFamily::<f64>::new(vec![]).is_err());
    assert!(MatrixFamily::new(vec![SymMatrix::<f64>::identity(2), SymMatrix::identity(3)]).is_err());
    let fam = MatrixFamily::new(vec![SymMatrix::from_diag(&[1.0, -4.0]), SymMatrix::identity(2)]).unwrap();
    assert_eq!(fam.sup_spectral_norm(), 4.0);
    assert_eq!(fam.len(), 2);
}

fn sym_strategy(max_n: usize) -> impl Strategy<Value = SymMatrix<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(-10.0f64..10.0, n * n)
            .prop_map(move |v| SymMatrix::from_row_major(n, v).unwrap())
    })
}

fn psd_strategy(n: usize) -> impl Strategy<Value = SymMatrix<f64>> {
    proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, n), 1..=n).prop_map(move |vs| {
        let mut m = SymMatrix::zeros(n);
        for v in &vs {
            m.add_outer(v, 1.0);
        }
        m
    })
}

proptest! {
    #[test]
    fn norm_sandwich(a in sym_strategy(12)) {
        let op = a.spectral_norm();
        let hs = a.hs_norm();
        let n = a.dim() as f64;
        prop_assert!(op <= hs * (1.0 + 1e-12) + 1e-12);
        prop_assert!(hs <= n.sqrt() * op * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn effective_rank_in_range(a in psd_strategy(6)) {
        prop_assume!(a.spectral_norm() > 1e-9);
        let r = a.effective_rank().unwrap();
        prop_assert!(r >= 1.0 - 1e-10 && r <= 6.0 + 1e-10);
    }

    #[test]
    fn loewner_order_is_partial_order(a in psd_strategy(4), b in psd_strategy(4), c in psd_strategy(4)) {
        prop_assert!(a.psd_leq(&a, 0.0).unwrap());
        // a ⪯ a + b ⪯ a + b + c
        let ab = a.add(&b).unwrap();
        let abc = ab.add(&c).unwrap();
        let tol = 1e-12 * abc.spectral_norm().max(1.0);
        prop_assert!(a.psd_leq(&ab, tol).unwrap());
        prop_assert!(ab.psd_leq(&abc, tol).unwrap());
        prop_assert!(a.psd_leq(&abc, tol).unwrap());
        if a.psd_leq(&b, 0.0).unwrap() && b.psd_leq(&a, 0.0).unwrap() {
            prop_assert!(a.max_abs_diff(&b) <= 1e-12 * a.spectral_norm().max(1.0) * 10.0);
        }
    }

    #[test]
    fn hadamard_commutes_and_distributes(a in sym_strategy(6), s in 0u64..1000) {
        let n = a.dim();
        let b = random_sym(n, s);
        let c = random_sym(n, s + 1);
        prop_assert_eq!(a.hadamard(&b).unwrap(), b.hadamard(&a).unwrap());
        let lhs = a.hadamard(&b.add(&c).unwrap()).unwrap();
        let rhs = a.hadamard(&b).unwrap().add(&a.hadamard(&c).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * 10.0);
    }
}

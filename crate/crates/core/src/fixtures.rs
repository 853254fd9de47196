//! Seeded random matrices and families used by tests, checks and experiments.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{MatrixFamily, SymMatrix};

/// Symmetric matrix with iid N(0, 1) entries on and above the diagonal.
pub fn random_symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix<f64> {
    SymMatrix::from_upper_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Wigner matrix scaled by `1/√n`, zero diagonal when `zero_diag`.
pub fn wigner<R: Rng + ?Sized>(n: usize, zero_diag: bool, rng: &mut R) -> SymMatrix<f64> {
    let s = 1.0 / (n as f64).sqrt();
    SymMatrix::from_upper_fn(n, |i, j| {
        let g: f64 = rng.sample(StandardNormal);
        if zero_diag && i == j {
            0.0
        } else {
            s * g
        }
    })
}

/// `GGᵀ / rank` with `G` an `n × rank` Gaussian matrix.
pub fn random_psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> SymMatrix<f64> {
    let mut out = SymMatrix::zeros(n);
    for _ in 0..rank {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        out.add_outer(&g, 1.0 / rank as f64);
    }
    out
}

pub fn random_family<R: Rng + ?Sized>(members: usize, n: usize, rng: &mut R) -> MatrixFamily<f64> {
    MatrixFamily::new((0..members).map(|_| random_symmetric(n, rng)).collect()).expect("nonempty family of equal dims")
}

pub fn random_psd_family<R: Rng + ?Sized>(members: usize, n: usize, rng: &mut R) -> MatrixFamily<f64> {
    MatrixFamily::new((0..members).map(|_| random_psd(n, n, rng)).collect()).expect("nonempty family of equal dims")
}

/// Random orthogonal matrix (row-major) from Gram-Schmidt on a Gaussian matrix.
pub fn random_rotation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(n);
    while q.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q.concat()
}

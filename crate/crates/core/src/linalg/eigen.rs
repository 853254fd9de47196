//! Dense symmetric eigen-solvers.
//!
//! Two routes are provided. [`jacobi`] is the cyclic Jacobi rotation method and
//! returns the full decomposition; it is the reference solver. [`tridiagonal_eigenvalues`]
//! reduces to tridiagonal form with Householder reflections and then runs the
//! implicit QL iteration; it only returns eigenvalues and is several times faster,
//! which matters for the replicate loops that need spectral norms of 64x64 sums.

use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 100;
const MAX_QL_ITERATIONS: usize = 60;

/// Eigen-decomposition `A = V diag(values) Vᵀ`, eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    /// Row-major `n x n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<T>,
}

/// Cyclic Jacobi on a row-major symmetric matrix.
///
/// Iterates full sweeps until the off-diagonal Frobenius mass drops below
/// `tol * ‖A‖_HS`.
pub fn jacobi<T: Real>(n: usize, entries: &[T], tol: T) -> Eigen<T> {
    let mut a = entries.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let hs = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let two = T::of(2.0);
    let huge = T::of(1e150).min(T::max_value().sqrt());

    if hs > T::zero() {
        for _ in 0..MAX_JACOBI_SWEEPS {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off += two * a[p * n + q] * a[p * n + q];
                }
            }
            if off.sqrt() <= tol * hs {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (two * apq);
                    let t = if theta.abs() > huge {
                        T::one() / (two * theta)
                    } else {
                        let sign = if theta < T::zero() { -T::one() } else { T::one() };
                        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    a[p * n + q] = T::zero();
                    a[q * n + p] = T::zero();
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![T::zero(); n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    Eigen { values, vectors }
}

/// Eigenvalues (ascending) by Householder tridiagonalization and implicit QL.
pub fn tridiagonal_eigenvalues<T: Real>(n: usize, entries: &[T]) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let mut a = entries.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    householder_tridiagonalize(n, &mut a, &mut d, &mut e);
    if !implicit_ql(&mut d, &mut e) {
        // QL did not converge within the iteration cap; fall back to the reference solver.
        log::warn!("implicit QL did not converge (n = {n}); falling back to Jacobi");
        return jacobi(n, entries, T::kernel_tol()).values;
    }
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    d
}

fn householder_tridiagonalize<T: Real>(n: usize, a: &mut [T], d: &mut [T], e: &mut [T]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == T::zero() {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let mut f = a[i * n + l];
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                f = T::zero();
                for j in 0..=l {
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = T::zero();
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

fn implicit_ql<T: Real>(d: &mut [T], e: &mut [T]) -> bool {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::of(2.0);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return false;
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    true
}

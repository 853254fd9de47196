//! Dense real symmetric matrices and the handful of spectral quantities the
//! concentration bounds are stated in: operator and Hilbert-Schmidt norms,
//! diagonal/off-diagonal split, effective rank, Loewner order, Hadamard product.

mod eigen;
mod text;

pub use eigen::{jacobi, tridiagonal_eigenvalues, Eigen};
pub use text::{format_matrix_text, parse_matrix_text};

use crate::error::{domain, input, Result};
use crate::scalar::Real;

/// Entries whose transpose differs by more than this are reported when symmetrizing.
pub const ASYMMETRY_WARN: f64 = 1e-12;

/// Dense `dim x dim` real symmetric matrix, stored row-major.
///
/// Symmetry is exact: constructors average `(A + Aᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = T::one();
        }
        m
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// All-ones matrix.
    pub fn ones(dim: usize) -> Self {
        SymMatrix { dim, data: vec![T::one(); dim * dim] }
    }

    /// Rank-one matrix `v vᵀ`.
    pub fn outer(v: &[T]) -> Self {
        let n = v.len();
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = v[i] * v[j];
            }
        }
        SymMatrix { dim: n, data }
    }

    /// Builds a matrix from its upper triangle; `f(i, j)` is called for `i <= j` only.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Validates finiteness and symmetrizes; returns the largest `|a_ij - a_ji|` seen.
    pub fn from_row_major_checked(dim: usize, entries: Vec<T>) -> Result<(Self, T)> {
        if dim == 0 {
            return input("matrix dimension must be positive");
        }
        if entries.len() != dim * dim {
            return input(format!("expected {} entries for dim {dim}, got {}", dim * dim, entries.len()));
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return input(format!("non-finite entry at ({}, {})", pos / dim, pos % dim));
        }
        let mut data = entries;
        let half = T::of(0.5);
        let mut asym = T::zero();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                asym = asym.max((a - b).abs());
                let avg = half * (a + b);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok((SymMatrix { dim, data }, asym))
    }

    /// Like [`Self::from_row_major_checked`], logging a warning when the input was
    /// asymmetric beyond [`ASYMMETRY_WARN`].
    pub fn from_row_major(dim: usize, entries: Vec<T>) -> Result<Self> {
        let (m, asym) = Self::from_row_major_checked(dim, entries)?;
        if asym > T::of(ASYMMETRY_WARN) {
            log::warn!("input matrix was asymmetric (max |a_ij - a_ji| = {asym}); replaced by (A + Aᵀ)/2");
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return input("rows must all have length equal to the row count");
        }
        Self::from_row_major(dim, rows.concat())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = T::zero();
        for i in 0..self.dim {
            let mut r = T::zero();
            for (&a, &xj) in self.row(i).iter().zip(x) {
                r += a * xj;
            }
            acc += x[i] * r;
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn scale(&self, s: T) -> Self {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|&a| a * s).collect() }
    }

    /// `self += s * v vᵀ`.
    pub fn add_outer(&mut self, v: &[T], s: T) {
        let n = self.dim;
        for i in 0..n {
            let si = s * v[i];
            for j in 0..n {
                self.data[i * n + j] += si * v[j];
            }
        }
    }

    /// `A²`.
    pub fn square(&self) -> Self {
        let n = self.dim;
        Self::from_upper_fn(n, |i, j| self.row(i).iter().zip(self.row(j)).map(|(&a, &b)| a * b).sum())
    }

    /// `Q A Qᵀ` for a row-major `n x n` matrix `q`.
    pub fn congruence(&self, q: &[T]) -> Self {
        let n = self.dim;
        debug_assert_eq!(q.len(), n * n);
        // tmp = Q A
        let mut tmp = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let qik = q[i * n + k];
                if qik == T::zero() {
                    continue;
                }
                for j in 0..n {
                    tmp[i * n + j] += qik * self.data[k * n + j];
                }
            }
        }
        Self::from_upper_fn(n, |i, j| (0..n).map(|k| tmp[i * n + k] * q[j * n + k]).sum())
    }

    pub fn diag_part(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            m.data[i * self.dim + i] = self.get(i, i);
        }
        m
    }

    pub fn off_part(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] = T::zero();
        }
        m
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a * b))
    }

    pub fn hs_norm(&self) -> T {
        self.data.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        tridiagonal_eigenvalues(self.dim, &self.data)
    }

    /// Full decomposition via cyclic Jacobi.
    pub fn eigen(&self) -> Eigen<T> {
        jacobi(self.dim, &self.data, T::kernel_tol())
    }

    /// Operator norm `max |λ_i|`.
    pub fn spectral_norm(&self) -> T {
        let ev = self.eigenvalues();
        match (ev.first(), ev.last()) {
            (Some(&lo), Some(&hi)) => lo.abs().max(hi.abs()),
            _ => T::zero(),
        }
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues().first().copied().unwrap_or_else(T::zero)
    }

    /// PSD up to the relative tolerance `1e-10 · ‖A‖`.
    pub fn is_psd(&self) -> bool {
        let ev = self.eigenvalues();
        let norm = ev.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        ev.first().map_or(true, |&lo| lo >= -T::of(1e-10) * norm)
    }

    /// `Tr(A) / ‖A‖` for PSD `A ≠ 0`.
    pub fn effective_rank(&self) -> Result<T> {
        let ev = self.eigenvalues();
        let norm = ev.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        if norm == T::zero() {
            return domain("effective rank of the zero matrix is undefined");
        }
        if ev[0] < -T::of(1e-10) * norm {
            return domain(format!("matrix is not PSD (min eigenvalue {})", ev[0]));
        }
        Ok(self.trace() / norm)
    }

    /// `A ⪯ B` in the Loewner order: `λ_min(B - A) ≥ -tol`.
    pub fn psd_leq(&self, other: &Self, tol: T) -> Result<bool> {
        if tol < T::zero() {
            return input("tolerance must be nonnegative");
        }
        let diff = other.sub(self)?;
        Ok(diff.min_eigenvalue() >= -tol)
    }

    /// Symmetric PSD square root; negative eigenvalues within tolerance are clipped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let eig = self.eigen();
        let n = self.dim;
        let norm = eig.values.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        if eig.values.first().map_or(false, |&lo| lo < -T::of(1e-10) * norm) {
            return domain("square root requires a PSD matrix");
        }
        let roots: Vec<T> = eig.values.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
        Ok(Self::from_upper_fn(n, |i, j| {
            (0..n).map(|k| eig.vectors[i * n + k] * roots[k] * eig.vectors[j * n + k]).sum()
        }))
    }

    /// `‖A‖_{1→1}`: largest absolute row sum.
    pub fn max_row_abs_sum(&self) -> T {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn cast<U: Real>(&self) -> SymMatrix<U> {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| U::of(x.to_f64().unwrap())).collect(),
        }
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return input(format!("dimension mismatch: {} vs {}", self.dim, other.dim));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Free-function forms mirroring the method names.
pub fn spectral_norm<T: Real>(a: &SymMatrix<T>) -> T {
    a.spectral_norm()
}

pub fn hs_norm<T: Real>(a: &SymMatrix<T>) -> T {
    a.hs_norm()
}

pub fn effective_rank<T: Real>(a: &SymMatrix<T>) -> Result<T> {
    a.effective_rank()
}

pub fn hadamard<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    a.hadamard(b)
}

pub fn psd_leq<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>, tol: T) -> Result<bool> {
    a.psd_leq(b, tol)
}

/// Nonempty ordered family of symmetric matrices sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFamily<T> {
    dim: usize,
    members: Vec<SymMatrix<T>>,
}

impl<T: Real> MatrixFamily<T> {
    pub fn new(members: Vec<SymMatrix<T>>) -> Result<Self> {
        let Some(first) = members.first() else {
            return input("matrix family must be nonempty");
        };
        let dim = first.dim();
        if let Some(k) = members.iter().position(|m| m.dim() != dim) {
            return input(format!("member {k} has dim {} but family dim is {dim}", members[k].dim()));
        }
        Ok(MatrixFamily { dim, members })
    }

    pub fn singleton(a: SymMatrix<T>) -> Self {
        MatrixFamily { dim: a.dim(), members: vec![a] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SymMatrix<T>] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SymMatrix<T>> {
        self.members.iter()
    }

    /// `sup_A ‖A‖`.
    pub fn sup_spectral_norm(&self) -> T {
        self.members.iter().map(|m| m.spectral_norm()).fold(T::zero(), T::max)
    }

    /// Family of diagonal parts `{Diag(A)}`.
    pub fn diag_parts(&self) -> Self {
        MatrixFamily { dim: self.dim, members: self.members.iter().map(|m| m.diag_part()).collect() }
    }

    pub fn map(&self, f: impl Fn(&SymMatrix<T>) -> SymMatrix<T>) -> Self {
        MatrixFamily { dim: self.dim, members: self.members.iter().map(f).collect() }
    }
}

#[cfg(test)]
mod tests;

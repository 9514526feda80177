//! Dense complex matrices and the Hermitian eigensolver.
//!
//! Everything here is row-major and square, with dimensions up to 4096.
//! Eigendecompositions go through nalgebra's Hermitian solver.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest matrix dimension accepted by the eigensolver (12 qubits).
pub const MAX_DIM: usize = 4096;

/// Elementwise tolerance used when validating conjugate symmetry.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::NotSquare {
                dim,
                len: data.len(),
            });
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Matrix { dim, data }
    }

    /// Outer product `v v†`.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |r, c| v[r] * v[c].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`; `self` is the more significant factor.
    pub fn kron(&self, other: &Matrix) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |r, c| {
            self.get(r / b, c / b) * other.get(r % b, c % b)
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Matrix, s: f64) {
        assert_eq!(self.dim, other.dim, "add dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest elementwise deviation from conjugate symmetry.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, j)).collect()
    }
}

/// A Hermitian matrix whose dimension is a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(Matrix);

impl HermitianMatrix {
    /// Validates conjugate symmetry to [`HERMITIAN_TOL`] and a power-of-two
    /// dimension. The stored matrix is the exact Hermitian part of the input.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.dim.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m.dim));
        }
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitian_part(&m))
    }

    /// `(M + M†) / 2`, for matrices that are Hermitian up to rounding.
    pub fn hermitian_part(m: &Matrix) -> Self {
        let n = m.dim;
        let mut out = m.clone();
        for r in 0..n {
            out.data[r * n + r] = Complex64::new(m.get(r, r).re, 0.0);
            for c in (r + 1)..n {
                let v = (m.get(r, c) + m.get(c, r).conj()) * 0.5;
                out.data[r * n + c] = v;
                out.data[c * n + r] = v.conj();
            }
        }
        HermitianMatrix(out)
    }

    pub fn from_real_diag(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diag(diag))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(Matrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(Matrix::zeros(dim))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0.get(r, c)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix(self.0.scale(s))
    }

    pub fn add_scaled(&mut self, other: &HermitianMatrix, s: f64) {
        self.0.add_scaled(&other.0, s);
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(self.0.sub(&other.0))
    }

    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix(self.0.kron(&other.0))
    }

    /// Eigenvalues ascending with orthonormal eigenvectors as columns.
    pub fn eigensystem(&self) -> Result<Eigensystem> {
        hermitian_eigensystem(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigensystem()?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigensystem()?.values[0])
    }

    /// Whether a Cholesky factorization succeeds with every pivot above
    /// `floor`, which certifies that the matrix is positive definite.
    pub fn is_positive_definite(&self, floor: f64) -> bool {
        let n = self.dim();
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut pivot = self.get(j, j).re;
            for k in 0..j {
                pivot -= l[j * n + k].norm_sqr();
            }
            if !(pivot > floor) {
                return false;
            }
            let root = pivot.sqrt();
            l[j * n + j] = Complex64::new(root, 0.0);
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = v / root;
            }
        }
        true
    }
}

/// Hilbert-Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &Matrix, b: &Matrix) -> Result<Complex64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

/// `Tr(A B)` for Hermitian `A`, `B`; always real.
pub fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    // Tr(AB) = sum_{rc} A_rc B_cr = sum_{rc} A_rc conj(B_rc)
    a.0.data
        .iter()
        .zip(&b.0.data)
        .map(|(x, y)| (x * y.conj()).re)
        .sum()
}

#[derive(Clone, Debug)]
pub struct Eigensystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Matrix,
}

impl Eigensystem {
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j)
    }

    /// `Σ_j w_j v_j v_j†` for replacement eigenvalues `w`.
    pub fn reconstruct_with(&self, weights: &[f64]) -> HermitianMatrix {
        let n = self.vectors.dim();
        let mut out = Matrix::zeros(n);
        for (j, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.vector(j);
            for r in 0..n {
                let vr = v[r] * w;
                for c in 0..n {
                    out.data[r * n + c] += vr * v[c].conj();
                }
            }
        }
        HermitianMatrix::hermitian_part(&out)
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.reconstruct_with(&self.values)
    }
}

/// Eigenvalues ascending with matching orthonormal eigenvectors.
pub fn hermitian_eigensystem(a: &HermitianMatrix) -> Result<Eigensystem> {
    let n = a.dim();
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_DIM });
    }
    let eig = nalgebra::SymmetricEigen::new(DMatrix::from_row_slice(n, n, &a.0.data));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, |r, j| eig.eigenvectors[(r, order[j])]);
    Ok(Eigensystem { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
        let m = Matrix::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianMatrix::hermitian_part(&m)
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = Matrix::from_vec(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn rejects_odd_dimension() {
        assert!(matches!(
            HermitianMatrix::new(Matrix::identity(3)),
            Err(Error::NotPowerOfTwo(3))
        ));
    }

    #[test]
    fn identity_spectrum() {
        let e = HermitianMatrix::identity(4).eigensystem().unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eigensystem_residual_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2, 4, 8, 16, 32] {
            for _ in 0..5 {
                let a = random_hermitian(&mut rng, dim);
                let e = a.eigensystem().unwrap();
                assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
                for j in 0..dim {
                    let v = e.vector(j);
                    for r in 0..dim {
                        let av: Complex64 = (0..dim).map(|k| a.get(r, k) * v[k]).sum();
                        assert!((av - v[r] * e.values[j]).norm() <= 1e-9 * dim as f64);
                    }
                }
                let gram = e.vectors.adjoint().matmul(&e.vectors);
                assert!(gram.max_abs_diff(&Matrix::identity(dim)) < 1e-9);
                assert!(e.reconstruct().matrix().max_abs_diff(a.matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // XX + ZZ has spectrum (-2, 0, 0, 2).
        let m = Matrix::from_diag(&[1.0, -1.0, -1.0, 1.0]);
        let mut xx = Matrix::zeros(4);
        for i in 0..4 {
            xx.set(i, 3 - i, c(1.0, 0.0));
        }
        let mut sum = m.clone();
        sum.add_scaled(&xx, 1.0);
        let e = HermitianMatrix::new(sum).unwrap().eigensystem().unwrap();
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for (a, b) in e.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hs_inner_dimension_mismatch() {
        assert!(hs_inner(&Matrix::identity(2), &Matrix::identity(4)).is_err());
    }

    #[test]
    fn positive_definite_check() {
        let m = HermitianMatrix::from_real_diag(&[0.5, 0.25]).unwrap();
        assert!(m.is_positive_definite(0.0));
        let m = HermitianMatrix::from_real_diag(&[0.5, -1e-9]).unwrap();
        assert!(!m.is_positive_definite(0.0));
        let x = HermitianMatrix::new(Matrix::from_fn(2, |r, col| c(if r == col { 0.0 } else { 1.0 }, 0.0))).unwrap();
        let mut m = HermitianMatrix::identity(2);
        m.add_scaled(&x, 0.999);
        assert!(m.is_positive_definite(0.0));
        m.add_scaled(&x, 0.002);
        assert!(!m.is_positive_definite(0.0));
    }

    #[test]
    fn kron_puts_left_factor_most_significant() {
        let z = Matrix::from_diag(&[1.0, -1.0]);
        let i = Matrix::identity(2);
        let zi = z.kron(&i);
        assert_eq!(zi.get(2, 2), c(-1.0, 0.0));
        assert_eq!(zi.get(1, 1), c(1.0, 0.0));
    }
}

//! Density matrices and the operations on them.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hs_inner, trace_product, HermitianMatrix, Matrix};
use crate::pauli::{PauliString, MAX_QUBITS};

/// Default tolerance for [`validate_density`].
pub const DEFAULT_DENSITY_TOL: f64 = 1e-8;

/// A positive semidefinite, trace-one matrix on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        DensityMatrix {
            n,
            matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) amplitude vector.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::NotPowerOfTwo(dim));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        Ok(DensityMatrix {
            n: dim.trailing_zeros() as usize,
            matrix: HermitianMatrix::hermitian_part(&Matrix::outer(&psi)),
        })
    }

    /// The computational basis state `|index⟩⟨index|`.
    pub fn basis_state(n: usize, index: usize) -> Self {
        let mut diag = vec![0.0; 1 << n];
        diag[index] = 1.0;
        DensityMatrix {
            n,
            matrix: HermitianMatrix::hermitian_part(&Matrix::from_diag(&diag)),
        }
    }

    /// Wraps a matrix already known to be a state (internal constructions).
    pub(crate) fn from_trusted(matrix: HermitianMatrix) -> Self {
        DensityMatrix {
            n: matrix.dim().trailing_zeros() as usize,
            matrix,
        }
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.matrix
    }

    /// `Tr(σ²)`.
    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix)
    }

    /// `ρ ⊗ τ`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n: self.n + other.n,
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    /// `q·self + (1-q)·other`.
    pub fn mix(&self, other: &DensityMatrix, q: f64) -> Result<DensityMatrix> {
        check_dim(self.dim(), other.dim())?;
        let mut m = self.matrix.scale(q);
        m.add_scaled(&other.matrix, 1.0 - q);
        Ok(DensityMatrix { n: self.n, matrix: m })
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Accepts `m` as a density matrix when its minimum eigenvalue is at least
/// `-tol` and its trace is within `tol` of one. Slightly negative eigenvalues
/// are clipped to zero and the result renormalized.
pub fn validate_density(m: HermitianMatrix, tol: f64) -> Result<DensityMatrix> {
    let trace = m.trace();
    if (trace - 1.0).abs() > tol {
        return Err(Error::TraceViolation { trace });
    }
    let eig = m.eigensystem()?;
    let min = eig.values[0];
    if min < -tol {
        return Err(Error::Negativity { min_eigenvalue: min });
    }
    let matrix = if min < 0.0 {
        let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
        let rebuilt = eig.reconstruct_with(&clipped);
        let t = rebuilt.trace();
        rebuilt.scale(1.0 / t)
    } else if trace != 1.0 {
        m.scale(1.0 / trace)
    } else {
        m
    };
    Ok(DensityMatrix::from_trusted(matrix))
}

/// Flat offsets of every assignment to `qubits` (first listed = most
/// significant) inside an `n`-qubit index.
fn scatter_offsets(qubits: &[usize], n: usize) -> Vec<usize> {
    (0..(1usize << qubits.len()))
        .map(|a| {
            qubits.iter().enumerate().fold(0usize, |acc, (j, &q)| {
                if (a >> (qubits.len() - 1 - j)) & 1 == 1 {
                    acc | (1 << (n - 1 - q))
                } else {
                    acc
                }
            })
        })
        .collect()
}

/// `Tr_{complement of keep}(m)` for any square matrix on `n` qubits.
pub fn partial_trace_matrix(m: &Matrix, n: usize, keep: &[usize]) -> Result<Matrix> {
    check_dim(1 << n, m.dim())?;
    if keep.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&q) = keep.iter().find(|&&q| q >= n) {
        return Err(Error::SubsetOutOfRange { qubit: q, n });
    }
    let env: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let keep_off = scatter_offsets(keep, n);
    let env_off = scatter_offsets(&env, n);
    let k = keep_off.len();
    let mut out = Matrix::zeros(k);
    for (a, &ka) in keep_off.iter().enumerate() {
        for (b, &kb) in keep_off.iter().enumerate() {
            let v: Complex64 = env_off.iter().map(|&e| m.get(ka | e, kb | e)).sum();
            out.set(a, b, v);
        }
    }
    Ok(out)
}

/// Reduced state on `keep`; the result's qubit order follows `keep` sorted
/// ascending.
pub fn partial_trace(sigma: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let m = partial_trace_matrix(sigma.matrix.matrix(), sigma.n, &keep)?;
    Ok(DensityMatrix::from_trusted(HermitianMatrix::hermitian_part(&m)))
}

/// `Tr|A - B|` via the full spectrum of the difference.
pub fn trace_norm_distance(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let eig = a.sub(b).eigensystem()?;
    Ok(eig.values.iter().map(|v| v.abs()).sum())
}

/// `‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    trace_norm_distance(&rho.matrix, &sigma.matrix)
}

/// `Tr(P σ)`.
pub fn expectation(sigma: &DensityMatrix, p: &PauliString) -> Result<f64> {
    expectation_of(sigma.matrix(), p)
}

/// `Tr(P M)` for any Hermitian `M` of matching dimension.
pub fn expectation_of(m: &HermitianMatrix, p: &PauliString) -> Result<f64> {
    check_dim(1 << p.num_qubits(), m.dim())?;
    Ok(p.mask().trace_with(m.matrix()).re)
}

/// The projectors `Π₊ = (I + P)/2` and `Π₋ = (I - P)/2`, so `P = Π₊ - Π₋`.
pub fn pauli_projectors(p: &PauliString) -> (HermitianMatrix, HermitianMatrix) {
    let dense = p.dense_matrix();
    let id = HermitianMatrix::identity(dense.dim());
    let mut plus = id.scale(0.5);
    plus.add_scaled(&dense, 0.5);
    let mut minus = id.scale(0.5);
    minus.add_scaled(&dense, -0.5);
    (plus, minus)
}

/// Outcome probabilities `(Tr(Π₊ M), Tr(Π₋ M))` of the two-outcome measurement
/// of `p`. Accepts any Hermitian `M`, so it also applies to matrices that are
/// not states.
pub fn povm_two_outcome_of(p: &PauliString, m: &HermitianMatrix) -> Result<(f64, f64)> {
    check_dim(1 << p.num_qubits(), m.dim())?;
    let (plus, minus) = pauli_projectors(p);
    let prob_plus = hs_inner(plus.matrix(), m.matrix())?.re;
    let prob_minus = hs_inner(minus.matrix(), m.matrix())?.re;
    Ok((prob_plus, prob_minus))
}

pub fn povm_two_outcome(p: &PauliString, state: &DensityMatrix) -> Result<(f64, f64)> {
    povm_two_outcome_of(p, state.matrix())
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidQubitCount(n));
    }
    Ok(())
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Sorts `subset` ascending and permutes the qubits of `m` to match, so that
/// the result acts on the sorted subset with its first qubit most significant.
pub fn sort_subset_operator(subset: &[usize], m: &Matrix) -> Result<(Vec<usize>, Matrix)> {
    let c = subset.len();
    if m.dim() != 1usize << c {
        return Err(Error::DimensionMismatch {
            expected: 1usize << c,
            found: m.dim(),
        });
    }
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by_key(|&j| subset[j]);
    let sorted: Vec<usize> = order.iter().map(|&j| subset[j]).collect();
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return Ok((sorted, m.clone()));
    }
    // New position p holds old qubit order[p].
    let remap = |idx: usize| -> usize {
        let mut old = 0;
        for (p, &j) in order.iter().enumerate() {
            if idx >> (c - 1 - p) & 1 == 1 {
                old |= 1 << (c - 1 - j);
            }
        }
        old
    };
    let out = Matrix::from_fn(m.dim(), |r, col| m.get(remap(r), remap(col)));
    Ok((sorted, out))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<DensityMatrix> {
    check_qubits(n)?;
    let psi: Vec<Complex64> = (0..(1usize << n)).map(|_| gaussian(rng)).collect();
    DensityMatrix::from_pure(&psi)
}

/// `G G† / Tr(G G†)` for a complex Gaussian `2^n × r` matrix `G`; `rank`
/// defaults to full.
pub fn random_mixed<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    rank: Option<usize>,
) -> Result<DensityMatrix> {
    check_qubits(n)?;
    let dim = 1usize << n;
    let r = rank.unwrap_or(dim).clamp(1, dim);
    let g: Vec<Complex64> = (0..dim * r).map(|_| gaussian(rng)).collect();
    let mut m = Matrix::zeros(dim);
    for row in 0..dim {
        for col in 0..dim {
            let v: Complex64 = (0..r).map(|k| g[row * r + k] * g[col * r + k].conj()).sum();
            m.set(row, col, v);
        }
    }
    let h = HermitianMatrix::hermitian_part(&m);
    let t = h.trace();
    Ok(DensityMatrix::from_trusted(h.scale(1.0 / t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::from_pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap()
    }

    fn ghz3() -> DensityMatrix {
        let mut amp = vec![c(0.0, 0.0); 8];
        amp[0] = c(1.0, 0.0);
        amp[7] = c(1.0, 0.0);
        DensityMatrix::from_pure(&amp).unwrap()
    }

    #[test]
    fn validate_examples() {
        let mixed = HermitianMatrix::from_real_diag(&[0.5, 0.5]).unwrap();
        assert!(validate_density(mixed, DEFAULT_DENSITY_TOL).is_ok());
        let neg = HermitianMatrix::from_real_diag(&[1.5, -0.5]).unwrap();
        assert!(matches!(
            validate_density(neg, DEFAULT_DENSITY_TOL),
            Err(Error::Negativity { .. })
        ));
        let heavy = HermitianMatrix::from_real_diag(&[0.6, 0.6]).unwrap();
        assert!(matches!(
            validate_density(heavy, DEFAULT_DENSITY_TOL),
            Err(Error::TraceViolation { .. })
        ));
    }

    #[test]
    fn validate_clips_tiny_negativity() {
        let m = HermitianMatrix::from_real_diag(&[1.0 + 1e-10, -1e-10]).unwrap();
        let rho = validate_density(m, DEFAULT_DENSITY_TOL).unwrap();
        let eig = rho.matrix().eigenvalues().unwrap();
        assert!(eig[0] >= 0.0);
        assert!((rho.matrix().trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let rho = partial_trace(&bell(), &[0]).unwrap();
        assert!(rho.matrix().matrix().max_abs_diff(&Matrix::from_diag(&[0.5, 0.5])) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_mixed(&mut rng, 1, None).unwrap();
        let b = random_mixed(&mut rng, 2, None).unwrap();
        let first = partial_trace(&a.tensor(&b), &[0]).unwrap();
        assert!(first.matrix().matrix().max_abs_diff(a.matrix().matrix()) < 1e-14);
        let second = partial_trace(&a.tensor(&b), &[1, 2]).unwrap();
        assert!(second.matrix().matrix().max_abs_diff(b.matrix().matrix()) < 1e-14);

        let ghz12 = partial_trace(&ghz3(), &[0, 1]).unwrap();
        let expected = Matrix::from_diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(ghz12.matrix().matrix().max_abs_diff(&expected) < 1e-15);

        assert!(matches!(partial_trace(&bell(), &[]), Err(Error::EmptySubset)));
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityMatrix::basis_state(1, 0);
        let one = DensityMatrix::basis_state(1, 1);
        assert_eq!(trace_distance(&zero, &zero).unwrap(), 0.0);
        assert!((trace_distance(&zero, &one).unwrap() - 2.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!((trace_distance(&zero, &mixed).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&zero, &bell()).is_err());
    }

    #[test]
    fn expectation_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        for p in PauliString::all(2).filter(|p| !p.is_identity()) {
            assert_eq!(expectation(&mixed, &p).unwrap(), 0.0);
        }
        let zero = DensityMatrix::basis_state(1, 0);
        assert_eq!(expectation(&zero, &"Z".parse().unwrap()).unwrap(), 1.0);
        let xx = expectation(&bell(), &"XX".parse().unwrap()).unwrap();
        assert!((xx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn povm_examples() {
        let zero = DensityMatrix::basis_state(1, 0);
        assert_eq!(povm_two_outcome(&"Z".parse().unwrap(), &zero).unwrap(), (1.0, 0.0));
        let mixed = DensityMatrix::maximally_mixed(1);
        assert_eq!(povm_two_outcome(&"X".parse().unwrap(), &mixed).unwrap(), (0.5, 0.5));
        let (p, m) = povm_two_outcome(&"ZZ".parse().unwrap(), &bell()).unwrap();
        assert!((p - 1.0).abs() < 1e-15 && m.abs() < 1e-15);
    }

    #[test]
    fn projectors_decompose_pauli() {
        let p: PauliString = "XY".parse().unwrap();
        let (plus, minus) = pauli_projectors(&p);
        assert_eq!(plus.sub(&minus), p.dense_matrix());
        let mut sum = plus.clone();
        sum.add_scaled(&minus, 1.0);
        assert_eq!(sum, HermitianMatrix::identity(4));
        assert!(plus.matrix().matmul(plus.matrix()).max_abs_diff(plus.matrix()) < 1e-15);
    }

    #[test]
    fn random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pure = random_pure(&mut rng, 1).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-9);
        assert!(validate_density(pure.matrix().clone(), 1e-9).is_ok());
        let mixed = random_mixed(&mut rng, 1, None).unwrap();
        assert!(validate_density(mixed.matrix().clone(), 1e-9).is_ok());
        let low = random_mixed(&mut rng, 3, Some(2)).unwrap();
        let eig = low.matrix().eigenvalues().unwrap();
        assert!(eig[..6].iter().all(|v| v.abs() < 1e-12));

        let a = random_mixed(&mut ChaCha8Rng::seed_from_u64(5), 2, None).unwrap();
        let b = random_mixed(&mut ChaCha8Rng::seed_from_u64(5), 2, None).unwrap();
        assert_eq!(a, b);
        assert!(random_pure(&mut rng, 0).is_err());
        assert!(random_pure(&mut rng, 13).is_err());
    }
}

//! Local Hamiltonians, their exact ground energy, and the linear objective
//! `f(α) = c₀ + g·α` over expectation vectors.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix, MAX_DIM};
use crate::pauli::{Layout, LocalPauliBasis};
use crate::state::{gaussian, sort_subset_operator};

/// Tolerance on the `[0, 1]` spectrum of each term.
pub const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Promise {
    Yes,
    No,
}

#[derive(Clone, Debug)]
pub struct LocalTerm {
    /// Sorted ascending.
    pub subset: Vec<usize>,
    pub matrix: HermitianMatrix,
}

/// `H = Σ H_i` with thresholds `a < b`.
#[derive(Clone, Debug)]
pub struct LocalHamiltonianInstance {
    layout: Layout,
    terms: Vec<LocalTerm>,
    a: f64,
    b: f64,
}

impl LocalHamiltonianInstance {
    /// Subsets may be listed in any order; the matching matrix qubits are
    /// reordered so every stored term acts on its sorted subset.
    pub fn new(n: usize, terms: Vec<(Vec<usize>, HermitianMatrix)>, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidThresholds { a, b });
        }
        let layout = Layout::new(n, terms.iter().map(|(s, _)| s.clone()).collect())?;
        let mut stored = Vec::with_capacity(terms.len());
        for (idx, (subset, h)) in terms.into_iter().enumerate() {
            let (sorted, m) = sort_subset_operator(&subset, h.matrix())?;
            let matrix = HermitianMatrix::new(m)?;
            let ev = matrix.eigenvalues()?;
            let (min, max) = (ev[0], ev[ev.len() - 1]);
            if min < -SPECTRUM_TOL || max > 1.0 + SPECTRUM_TOL {
                return Err(Error::SpectrumOutOfRange { term: idx, min, max });
            }
            stored.push(LocalTerm {
                subset: sorted,
                matrix,
            });
        }
        Ok(LocalHamiltonianInstance {
            layout,
            terms: stored,
            a,
            b,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The reduction's threshold `t = (a + b)/2`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

/// `m ⊗ I` with `m` acting on `subset` (sorted) of an `n`-qubit register.
pub fn embed_operator(m: &Matrix, subset: &[usize], n: usize) -> Result<Matrix> {
    let dim = 1usize.checked_shl(n as u32).filter(|&d| d <= MAX_DIM).ok_or(
        Error::DimensionTooLarge {
            dim: 1usize << n.min(63),
            max: MAX_DIM,
        },
    )?;
    let c = subset.len();
    if m.dim() != 1usize << c {
        return Err(Error::DimensionMismatch {
            expected: 1usize << c,
            found: m.dim(),
        });
    }
    let bits: Vec<usize> = subset.iter().map(|&q| n - 1 - q).collect();
    let local_mask: usize = bits.iter().map(|&b| 1usize << b).sum();
    let spread = |local: usize| -> usize {
        let mut g = 0;
        for (p, &b) in bits.iter().enumerate() {
            if local >> (c - 1 - p) & 1 == 1 {
                g |= 1 << b;
            }
        }
        g
    };
    let spreads: Vec<usize> = (0..m.dim()).map(spread).collect();
    let mut out = Matrix::zeros(dim);
    for rest in (0..dim).filter(|r| r & local_mask == 0) {
        for (lr, &sr) in spreads.iter().enumerate() {
            for (lc, &sc) in spreads.iter().enumerate() {
                let v = m.get(lr, lc);
                if v != Complex64::new(0.0, 0.0) {
                    out.set(rest | sr, rest | sc, v);
                }
            }
        }
    }
    Ok(out)
}

/// The full `2^n × 2^n` matrix `Σ_i H_i ⊗ I`.
pub fn assemble_global(lh: &LocalHamiltonianInstance) -> Result<HermitianMatrix> {
    let n = lh.num_qubits();
    let mut total = Matrix::zeros(1usize << n);
    for t in &lh.terms {
        total.add_scaled(&embed_operator(t.matrix.matrix(), &t.subset, n)?, 1.0);
    }
    Ok(HermitianMatrix::hermitian_part(&total))
}

/// Exact ground energy by diagonalizing the assembled Hamiltonian.
pub fn min_eigenvalue(lh: &LocalHamiltonianInstance) -> Result<f64> {
    assemble_global(lh)?.min_eigenvalue()
}

/// `f(α) = c₀ + g·α` with `α` indexed by `basis`.
#[derive(Clone, Debug)]
pub struct ObjectiveFunction {
    basis: Arc<LocalPauliBasis>,
    coeffs: Vec<f64>,
    constant: f64,
}

impl ObjectiveFunction {
    pub fn basis(&self) -> &Arc<LocalPauliBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }
}

pub fn build_objective(
    lh: &LocalHamiltonianInstance,
    basis: &Arc<LocalPauliBasis>,
) -> Result<ObjectiveFunction> {
    if basis.layout() != lh.layout() {
        return Err(Error::LayoutMismatch);
    }
    let mut coeffs = vec![0.0; basis.len()];
    for (e, (p, g)) in basis.elements().iter().zip(coeffs.iter_mut()).enumerate() {
        for &i in basis.covering_subsets(e) {
            let t = &lh.terms[i];
            let local = p.restrict(&t.subset)?.mask();
            *g += local.trace_with(t.matrix.matrix()).re / (1u64 << t.subset.len()) as f64;
        }
    }
    let constant = lh
        .terms
        .iter()
        .map(|t| t.matrix.trace() / (1u64 << t.subset.len()) as f64)
        .sum();
    Ok(ObjectiveFunction {
        basis: Arc::clone(basis),
        coeffs,
        constant,
    })
}

pub fn evaluate_objective(obj: &ObjectiveFunction, alphas: &[f64]) -> Result<f64> {
    if alphas.len() != obj.coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: obj.coeffs.len(),
            found: alphas.len(),
        });
    }
    Ok(obj.constant + obj.coeffs.iter().zip(alphas).map(|(g, a)| g * a).sum::<f64>())
}

pub fn objective_gradient(obj: &ObjectiveFunction) -> Vec<f64> {
    obj.coeffs.clone()
}

/// A Gaussian Hermitian matrix with its spectrum rescaled to exactly `[0, 1]`.
pub fn random_unit_term<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<HermitianMatrix> {
    let g = Matrix::from_fn(dim, |_, _| gaussian(rng));
    let h = HermitianMatrix::hermitian_part(&g);
    let ev = h.eigenvalues()?;
    let (lo, hi) = (ev[0], ev[dim - 1]);
    let spread = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
    let mut out = h.clone();
    out.add_scaled(&HermitianMatrix::identity(dim), -lo);
    Ok(out.scale(1.0 / spread))
}

/// Random `m`-term, `k`-local instance on `n` qubits whose thresholds are
/// placed around the exact ground energy `λ`: a YES instance has
/// `a = λ + gap/4`, a NO instance has `b = λ − gap/4`, and `b − a = gap`.
///
/// Subsets are distinct whenever `C(n, k) ≥ m`. Draws that would push `a`
/// below zero are discarded and redrawn.
pub fn random_lh<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    k: usize,
    gap: f64,
    promise: Promise,
) -> Result<LocalHamiltonianInstance> {
    if k == 0 || k > n || m == 0 {
        return Err(Error::Config(format!(
            "need 1 <= k <= n and m >= 1, got n={n}, m={m}, k={k}"
        )));
    }
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::Config(format!("gap must be positive, got {gap}")));
    }
    let margin = gap / 4.0;
    for _ in 0..1000 {
        let subsets = random_subsets(rng, n, m, k);
        let mut terms = Vec::with_capacity(m);
        for s in &subsets {
            terms.push((s.clone(), random_unit_term(rng, 1 << k)?));
        }
        let lambda = {
            let probe = LocalHamiltonianInstance::new(n, terms.clone(), 0.0, 1.0)?;
            min_eigenvalue(&probe)?
        };
        let (a, b) = match promise {
            Promise::Yes => (lambda + margin, lambda + margin + gap),
            Promise::No => (lambda - margin - gap, lambda - margin),
        };
        if a < 0.0 {
            continue;
        }
        return LocalHamiltonianInstance::new(n, terms, a, b);
    }
    Err(Error::Config(format!(
        "could not place a {promise:?} instance with gap {gap} on n={n}, m={m}, k={k}"
    )))
}

pub(crate) fn random_subsets<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, k: usize) -> Vec<Vec<usize>> {
    let total = binomial(n, k);
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(m);
    while out.len() < m {
        let mut s = sample(rng, n, k).into_vec();
        s.sort_unstable();
        if total >= m as u128 && out.contains(&s) {
            continue;
        }
        out.push(s);
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

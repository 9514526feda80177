//! Consistency instances in both coordinate systems and the maps between them.
//!
//! A tuple of local density matrices `(ρ_1..ρ_m)` on the subsets of a
//! [`Layout`] corresponds to the vector of local Pauli expectations
//! `α_P = Tr((P|C_i) ρ_i)`; [`marginals_to_alphas`] and
//! [`alphas_to_marginals`] are mutually inverse on consistent tuples.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix};
use crate::pauli::{Layout, LocalPauliBasis, PauliString};
use crate::state::{partial_trace, validate_density, DensityMatrix, DEFAULT_DENSITY_TOL};

/// Marginals that disagree on a shared Pauli by more than this are rejected.
pub const OVERLAP_TOL: f64 = 1e-8;

/// Distance below which a finite-precision instance is treated as exactly
/// consistent.
pub const YES_TOL: f64 = 1e-6;

/// Expectation values `(α_P)_{P∈S}`; the identity coefficient `α_I = 1` is
/// implicit.
#[derive(Clone, Debug)]
pub struct AlphaVector {
    basis: Arc<LocalPauliBasis>,
    values: Vec<f64>,
}

impl AlphaVector {
    pub fn new(basis: Arc<LocalPauliBasis>, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("non-finite expectation value".into()));
        }
        Ok(AlphaVector { basis, values })
    }

    pub fn zeros(basis: Arc<LocalPauliBasis>) -> Self {
        let values = vec![0.0; basis.len()];
        AlphaVector { basis, values }
    }

    /// `α_P = Tr(P σ)` for every `P ∈ S`.
    pub fn from_state(basis: Arc<LocalPauliBasis>, sigma: &DensityMatrix) -> Result<Self> {
        if sigma.num_qubits() != basis.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: basis.num_qubits(),
                found: sigma.num_qubits(),
            });
        }
        let values = basis
            .masks()
            .iter()
            .map(|m| m.trace_with(sigma.matrix().matrix()).re)
            .collect();
        Ok(AlphaVector { basis, values })
    }

    pub fn basis(&self) -> &Arc<LocalPauliBasis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, p: &PauliString) -> Option<f64> {
        self.basis.index_of(p).map(|i| self.values[i])
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The state `(I + Σ α_P P) / 2^n`. Its Pauli coordinates equal `self`
    /// exactly; it is a valid state whenever it is positive semidefinite,
    /// which holds in particular when `‖α‖ ≤ 1/√d`.
    pub fn linear_witness(&self) -> HermitianMatrix {
        let dim = 1usize << self.basis.num_qubits();
        let mut m = Matrix::identity(dim);
        for (mask, &a) in self.basis.masks().iter().zip(&self.values) {
            mask.accumulate(&mut m, a);
        }
        HermitianMatrix::hermitian_part(&m).scale(1.0 / dim as f64)
    }
}

/// Local density matrices `ρ_i` on the subsets `C_i`, with promise gap `β`.
/// Overlap compatibility is deliberately not checked here.
#[derive(Clone, Debug)]
pub struct ConsistencyInstance {
    layout: Layout,
    marginals: Vec<DensityMatrix>,
    beta: f64,
}

impl ConsistencyInstance {
    pub fn new(layout: Layout, marginals: Vec<DensityMatrix>, beta: f64) -> Result<Self> {
        if marginals.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: marginals.len(),
            });
        }
        for (subset, rho) in layout.subsets().iter().zip(&marginals) {
            if rho.num_qubits() != subset.len() {
                return Err(Error::DimensionMismatch {
                    expected: subset.len(),
                    found: rho.num_qubits(),
                });
            }
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        Ok(ConsistencyInstance {
            layout,
            marginals,
            beta,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn marginals(&self) -> &[DensityMatrix] {
        &self.marginals
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }
}

/// Local Pauli expectations with an L2 promise gap `β′`.
#[derive(Clone, Debug)]
pub struct ConsistencyPrimeInstance {
    alphas: AlphaVector,
    beta_prime: f64,
}

impl ConsistencyPrimeInstance {
    pub fn new(alphas: AlphaVector, beta_prime: f64) -> Result<Self> {
        if !(beta_prime > 0.0 && beta_prime.is_finite()) {
            return Err(Error::Config(format!(
                "beta_prime must be positive, got {beta_prime}"
            )));
        }
        Ok(ConsistencyPrimeInstance { alphas, beta_prime })
    }

    pub fn alphas(&self) -> &AlphaVector {
        &self.alphas
    }

    pub fn basis(&self) -> &Arc<LocalPauliBasis> {
        self.alphas.basis()
    }

    pub fn layout(&self) -> &Layout {
        self.alphas.basis().layout()
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta_prime
    }
}

/// `α_P = Tr((P|C_i) ρ_i)` using the first subset covering `P`. Every other
/// covering subset must agree to [`OVERLAP_TOL`].
pub fn marginals_to_alphas(
    inst: &ConsistencyInstance,
    basis: &Arc<LocalPauliBasis>,
) -> Result<AlphaVector> {
    if basis.layout() != inst.layout() {
        return Err(Error::LayoutMismatch);
    }
    let subsets = inst.layout.subsets();
    let mut values = Vec::with_capacity(basis.len());
    for (e, p) in basis.elements().iter().enumerate() {
        let covers = basis.covering_subsets(e);
        let local_value = |i: usize| -> Result<f64> {
            let local = p.restrict(&subsets[i])?;
            Ok(local.mask().trace_with(inst.marginals[i].matrix().matrix()).re)
        };
        let first = covers[0];
        let value = local_value(first)?;
        for &other in &covers[1..] {
            let v = local_value(other)?;
            let deviation = (v - value).abs();
            if deviation > OVERLAP_TOL {
                return Err(Error::OverlapMismatch {
                    first,
                    second: other,
                    pauli: p.to_string(),
                    deviation,
                });
            }
        }
        values.push(value);
    }
    AlphaVector::new(Arc::clone(basis), values)
}

/// One matrix produced by [`alphas_to_marginals`].
#[derive(Clone, Debug)]
pub struct ReconstructedMarginal {
    pub matrix: HermitianMatrix,
    pub min_eigenvalue: f64,
}

impl ReconstructedMarginal {
    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -DEFAULT_DENSITY_TOL
    }
}

/// `ρ_i = 2^{-|C_i|} Σ_{supp(P) ⊆ C_i} α_P (P|C_i)`, including the identity
/// term. The results are Hermitian with unit trace but need not be positive.
pub fn alphas_to_marginals(alphas: &AlphaVector) -> Result<Vec<ReconstructedMarginal>> {
    let basis = alphas.basis();
    basis
        .layout()
        .subsets()
        .iter()
        .enumerate()
        .map(|(i, subset)| {
            let dim = 1usize << subset.len();
            let mut m = Matrix::identity(dim);
            for &e in basis.subset_members(i) {
                let local = basis.elements()[e].restrict(subset)?;
                local.mask().accumulate(&mut m, alphas.values[e]);
            }
            let matrix = HermitianMatrix::hermitian_part(&m).scale(1.0 / dim as f64);
            let min_eigenvalue = matrix.min_eigenvalue()?;
            Ok(ReconstructedMarginal {
                matrix,
                min_eigenvalue,
            })
        })
        .collect()
}

/// Outcome of mapping a Consistency′ instance to trace-distance form.
#[derive(Clone, Debug)]
pub enum PrimeMapping {
    Instance(ConsistencyInstance),
    /// Some reconstructed marginal is not a state, so no global state can
    /// reproduce the expectations: a NO instance.
    NonPsd {
        subset: usize,
        min_eigenvalue: f64,
        beta: f64,
    },
}

impl PrimeMapping {
    pub fn beta(&self) -> f64 {
        match self {
            PrimeMapping::Instance(inst) => inst.beta(),
            PrimeMapping::NonPsd { beta, .. } => *beta,
        }
    }
}

/// Rebuilds the marginals from the expectations and sets `β = β′/√d`.
pub fn consistency_from_prime(p: &ConsistencyPrimeInstance) -> Result<PrimeMapping> {
    let d = p.basis().len().max(1) as f64;
    let beta = p.beta_prime / d.sqrt();
    let mut marginals = Vec::with_capacity(p.layout().len());
    for (i, rec) in alphas_to_marginals(p.alphas())?.into_iter().enumerate() {
        match validate_density(rec.matrix, DEFAULT_DENSITY_TOL) {
            Ok(rho) => marginals.push(rho),
            Err(Error::Negativity { min_eigenvalue }) => {
                return Ok(PrimeMapping::NonPsd {
                    subset: i,
                    min_eigenvalue,
                    beta,
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PrimeMapping::Instance(ConsistencyInstance::new(
        p.layout().clone(),
        marginals,
        beta,
    )?))
}

/// The instance whose marginals are the reductions of `sigma`.
pub fn marginals_of_state(
    sigma: &DensityMatrix,
    layout: &Layout,
    beta: f64,
) -> Result<ConsistencyInstance> {
    if sigma.num_qubits() != layout.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: layout.num_qubits(),
            found: sigma.num_qubits(),
        });
    }
    let marginals = layout
        .subsets()
        .iter()
        .map(|s| partial_trace(sigma, s))
        .collect::<Result<Vec<_>>>()?;
    ConsistencyInstance::new(layout.clone(), marginals, beta)
}

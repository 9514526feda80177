//! Instance generators: consistent instances from states, certified NO
//! instances, and named presets.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::random_subsets;
use crate::linalg::Matrix;
use crate::marginal::{marginals_of_state, marginals_to_alphas, AlphaVector, ConsistencyInstance, ConsistencyPrimeInstance};
use crate::oracle::{fw_distance, OracleConfig};
use crate::pauli::{local_pauli_set, Layout, LocalPauliBasis};
use crate::state::{random_mixed, DensityMatrix};

/// Oracle settings used to certify distances of generated NO instances.
pub fn certification_config() -> OracleConfig {
    OracleConfig {
        max_iters: 20_000,
        gap_tol: 1e-12,
        dist_tol: 1e-12,
        ..OracleConfig::default()
    }
}

/// A layout of `m` random `k`-subsets of `n` qubits, distinct when possible.
pub fn random_layout<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, k: usize) -> Result<Layout> {
    if k == 0 || k > n || m == 0 {
        return Err(Error::Config(format!(
            "need 1 <= k <= n and m >= 1, got n={n}, m={m}, k={k}"
        )));
    }
    Layout::new(n, random_subsets(rng, n, m, k))
}

/// The marginals of a random mixed state of random rank, with the state.
pub fn consistent_instance<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &Layout,
    beta: f64,
) -> Result<(ConsistencyInstance, DensityMatrix)> {
    let n = layout.num_qubits();
    let rank = rng.random_range(1..=(1usize << n));
    let sigma = random_mixed(rng, n, Some(rank))?;
    Ok((marginals_of_state(&sigma, layout, beta)?, sigma))
}

/// Named global states for `gen consistency --from-state`.
pub fn named_state(name: &str, n: usize) -> Result<DensityMatrix> {
    if n == 0 || n > crate::pauli::MAX_QUBITS {
        return Err(Error::InvalidQubitCount(n));
    }
    let dim = 1usize << n;
    let mut amp = vec![Complex64::new(0.0, 0.0); dim];
    match name {
        "ghz" => {
            amp[0] = Complex64::new(1.0, 0.0);
            amp[dim - 1] = Complex64::new(1.0, 0.0);
        }
        "w" => {
            for q in 0..n {
                amp[1 << q] = Complex64::new(1.0, 0.0);
            }
        }
        "zero" => amp[0] = Complex64::new(1.0, 0.0),
        "mixed" => return Ok(DensityMatrix::maximally_mixed(n)),
        _ => {
            return Err(Error::Config(format!(
                "unknown state {name:?}; expected ghz, w, zero or mixed"
            )))
        }
    }
    DensityMatrix::from_pure(&amp)
}

fn singlet() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    DensityMatrix::from_pure(&[z, Complex64::new(s, 0.0), Complex64::new(-s, 0.0), z]).expect("normalized")
}

/// Singlets on all three pairs of a triangle. The closest consistent
/// expectation vector is at L2 distance 2 (the pair correlations of any three
/// qubits sum to at least −3, against −9 requested), so `β = 2/√36`.
pub fn singlet_triangle() -> ConsistencyInstance {
    let layout = Layout::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).expect("valid layout");
    ConsistencyInstance::new(layout, vec![singlet(), singlet(), singlet()], 1.0 / 3.0).expect("valid instance")
}

/// A NO instance with its certified L2 distance to `K′`.
#[derive(Clone, Debug)]
pub struct CertifiedNo {
    pub instance: ConsistencyInstance,
    pub alphas: AlphaVector,
    /// Certified lower bound on the L2 distance to `K′`.
    pub beta_prime: f64,
}

/// Triangle instance whose pair marginals are locally rotated Bell states
/// mixed with white noise at visibility `p`. Single-qubit marginals are all
/// `I/2`, so the pairs overlap consistently, but three qubits cannot be
/// pairwise maximally correlated. `β` is the certified L2 distance over `√d`.
pub fn bell_triangle<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<CertifiedNo> {
    let layout = Layout::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]])?;
    let phi = {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        DensityMatrix::from_pure(&[Complex64::new(s, 0.0), z, z, Complex64::new(s, 0.0)])?
    };
    let noise = DensityMatrix::maximally_mixed(2);
    let mut marginals = Vec::with_capacity(3);
    for _ in 0..3 {
        let u = random_unitary(rng, 2).kron(&random_unitary(rng, 2));
        let rotated = u.matmul(phi.matrix().matrix()).matmul(&u.adjoint());
        let rotated = crate::state::validate_density(
            crate::linalg::HermitianMatrix::hermitian_part(&rotated),
            crate::state::DEFAULT_DENSITY_TOL,
        )?;
        marginals.push(rotated.mix(&noise, p)?);
    }
    certify_trace_form(layout, marginals)
}

fn certify_trace_form(layout: Layout, marginals: Vec<DensityMatrix>) -> Result<CertifiedNo> {
    let basis = Arc::new(local_pauli_set(&layout));
    let provisional = ConsistencyInstance::new(layout.clone(), marginals.clone(), 1.0)?;
    let alphas = marginals_to_alphas(&provisional, &basis)?;
    let res = fw_distance(&alphas, &certification_config())?;
    let beta_prime = res.lower_bound;
    if !(beta_prime > 0.0) {
        return Err(Error::Config("generated instance is not certifiably inconsistent".into()));
    }
    let beta = beta_prime / (basis.len() as f64).sqrt();
    Ok(CertifiedNo {
        instance: ConsistencyInstance::new(layout, marginals, beta)?,
        alphas,
        beta_prime,
    })
}

/// A Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix {
    let g = Matrix::from_fn(dim, |_, _| crate::state::gaussian(rng));
    // Modified Gram-Schmidt on the columns.
    let mut cols: Vec<Vec<Complex64>> = (0..dim).map(|j| g.column(j)).collect();
    for j in 0..dim {
        for k in 0..j {
            let proj: Complex64 = (0..dim).map(|r| cols[k][r].conj() * cols[j][r]).sum();
            for r in 0..dim {
                let v = cols[k][r];
                cols[j][r] -= proj * v;
            }
        }
        let norm = cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|c| *c /= norm);
    }
    Matrix::from_fn(dim, |r, c| cols[c][r])
}

/// A Consistency′ NO instance: the expectation vector of a random state with
/// one coordinate pushed to `±(1 + push)`. Every point of `K′` has coordinates
/// in `[−1, 1]`, so the distance is at least `push`, which becomes `β′`.
pub fn prime_no_instance<R: Rng + ?Sized>(
    rng: &mut R,
    basis: &Arc<LocalPauliBasis>,
    push: f64,
) -> Result<ConsistencyPrimeInstance> {
    if !(push > 0.0 && push.is_finite()) {
        return Err(Error::Config(format!("push must be positive, got {push}")));
    }
    let sigma = random_mixed(rng, basis.num_qubits(), None)?;
    let mut values = AlphaVector::from_state(Arc::clone(basis), &sigma)?.into_values();
    let j = rng.random_range(0..values.len());
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    values[j] = sign * (1.0 + push);
    ConsistencyPrimeInstance::new(AlphaVector::new(Arc::clone(basis), values)?, push)
}

//! Local Hamiltonian to consistency: minimize the linear energy objective over
//! `K′` with the random-walk feasibility solver, using the consistency oracle
//! as the membership test.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bv::{feasibility_solve, FeasibleRegion, LinearObjective, MembershipOracle, RoundRecord, StopReason, Verdict, WalkConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_objective, LocalHamiltonianInstance, ObjectiveFunction};
use crate::marginal::AlphaVector;
use crate::oracle::{membership_with_hint, Decision, OracleConfig};
use crate::pauli::{local_pauli_set, LocalPauliBasis};
use crate::state::DensityMatrix;

impl LinearObjective for ObjectiveFunction {
    fn value(&self, x: &[f64]) -> f64 {
        self.constant() + crate::bv::dot(self.coeffs(), x)
    }

    fn gradient(&self) -> &[f64] {
        self.coeffs()
    }
}

/// Membership in `K′` up to `β′/2`, certified by a nearby state.
#[derive(Clone)]
pub struct KPrimeOracle {
    basis: Arc<LocalPauliBasis>,
    beta_prime: f64,
    cfg: OracleConfig,
}

impl KPrimeOracle {
    /// Tightens `cfg` to resolve `β′`.
    pub fn new(basis: Arc<LocalPauliBasis>, beta_prime: f64, cfg: &OracleConfig) -> Result<Self> {
        if !(beta_prime > 0.0 && beta_prime.is_finite()) {
            return Err(Error::Config(format!("beta_prime must be positive, got {beta_prime}")));
        }
        Ok(KPrimeOracle {
            basis,
            beta_prime,
            cfg: cfg.for_threshold(beta_prime),
        })
    }

    pub fn beta_prime(&self) -> f64 {
        self.beta_prime
    }
}

impl MembershipOracle for KPrimeOracle {
    type Certificate = Arc<DensityMatrix>;

    fn certify(&self, x: &[f64], near: Option<&Arc<DensityMatrix>>) -> Result<Option<Arc<DensityMatrix>>> {
        let alphas = AlphaVector::new(Arc::clone(&self.basis), x.to_vec())?;
        let out = membership_with_hint(&alphas, self.beta_prime, &self.cfg, near.map(|c| c.as_ref()))?;
        Ok(match (out.decision, out.witness) {
            (Decision::Yes, Some(w)) => Some(Arc::new(w)),
            _ => None,
        })
    }
}

/// Settings for the reduction, as read from `--config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub oracle: OracleConfig,
    pub walk: WalkConfig,
    /// Promise gap of the membership oracle; `None` selects [`default_beta_prime`].
    pub beta_prime: Option<f64>,
    /// Frank-Wolfe iteration budget per membership query during the walk,
    /// replacing `oracle.max_iters`. A query that cannot certify a witness
    /// within `β′/2` in this budget is answered NO.
    pub membership_iters: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            oracle: OracleConfig::default(),
            walk: WalkConfig::default(),
            beta_prime: None,
            membership_iters: 8,
        }
    }
}

/// `(b − a)/(4‖g‖₂)`: accepted points lie within `β′/2` of `K′`, so their
/// energy is at most `(b − a)/8` below the true minimum, which keeps NO
/// instances (`t ≤ λ − (b − a)/2`) out of reach.
pub fn default_beta_prime(lh: &LocalHamiltonianInstance, obj: &ObjectiveFunction) -> f64 {
    let norm = obj.coeffs().iter().map(|g| g * g).sum::<f64>().sqrt();
    let width = lh.b() - lh.a();
    if norm > 0.0 {
        width / (4.0 * norm)
    } else {
        width
    }
}

#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub answer: Decision,
    pub t: f64,
    pub beta_prime: f64,
    pub rounds_used: usize,
    pub reason: StopReason,
    /// The feasible point, on YES.
    pub witness: Option<AlphaVector>,
    /// `f` at the witness.
    pub witness_energy: Option<f64>,
    pub transcript: Vec<RoundRecord>,
}

/// One run of the reduction with threshold `t = (a + b)/2`.
pub fn reduce_and_solve<R: Rng + ?Sized>(
    lh: &LocalHamiltonianInstance,
    cfg: &ReductionConfig,
    rng: &mut R,
) -> Result<ReductionOutcome> {
    let basis = Arc::new(local_pauli_set(lh.layout()));
    let obj = build_objective(lh, &basis)?;
    let beta_prime = cfg.beta_prime.unwrap_or_else(|| default_beta_prime(lh, &obj));
    let oracle_cfg = OracleConfig {
        max_iters: cfg.membership_iters,
        ..cfg.oracle.clone()
    };
    let oracle = KPrimeOracle::new(Arc::clone(&basis), beta_prime, &oracle_cfg)?;
    let region = FeasibleRegion::new(oracle, basis.len());
    let t = lh.midpoint();
    let res = feasibility_solve(&region, &obj, t, &cfg.walk, rng)?;
    let (answer, witness, witness_energy) = match res.verdict {
        Verdict::Feasible(p) => {
            let e = obj.value(&p.x);
            (Decision::Yes, Some(AlphaVector::new(basis, p.x)?), Some(e))
        }
        Verdict::Infeasible => (Decision::No, None, None),
    };
    Ok(ReductionOutcome {
        answer,
        t,
        beta_prime,
        rounds_used: res.rounds,
        reason: res.reason,
        witness,
        witness_energy,
        transcript: res.transcript,
    })
}

/// The generator for run `j` of an amplified reduction.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

#[derive(Clone, Debug)]
pub struct AmplifiedOutcome {
    pub answer: Decision,
    pub runs: Vec<ReductionOutcome>,
}

impl AmplifiedOutcome {
    pub fn yes_votes(&self) -> usize {
        self.runs.iter().filter(|r| r.answer == Decision::Yes).count()
    }
}

/// Majority vote over `runs` independent runs; run `j` uses [`run_rng`]`(seed, j)`.
pub fn amplified(
    lh: &LocalHamiltonianInstance,
    cfg: &ReductionConfig,
    runs: usize,
    seed: u64,
) -> Result<AmplifiedOutcome> {
    if runs % 2 == 0 {
        return Err(Error::Config(format!("runs must be odd, got {runs}")));
    }
    let outcomes = (0..runs)
        .map(|j| reduce_and_solve(lh, cfg, &mut run_rng(seed, j)))
        .collect::<Result<Vec<_>>>()?;
    let yes = outcomes.iter().filter(|r| r.answer == Decision::Yes).count();
    Ok(AmplifiedOutcome {
        answer: if 2 * yes > runs { Decision::Yes } else { Decision::No },
        runs: outcomes,
    })
}

//! Simulation of the consistency verifier: pick a subset `C_i` and a Pauli
//! `Q` on it, measure `Q ⊗ I` on the witness and accept on outcome `+1`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginal::ConsistencyInstance;
use crate::pauli::PauliString;
use crate::state::{expectation, DensityMatrix};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifierRound {
    /// Index into the layout's subsets (0-based).
    pub i: usize,
    /// Sorted subset `C_i`.
    pub subset: Vec<usize>,
    /// Pauli string on the `|C_i|` qubits of the subset.
    pub q: PauliString,
    /// `1/2 + Tr(Q ρ_i)/2`, the acceptance probability of a consistent witness.
    pub target: f64,
    /// `β / 4^{|C_i|} / 2`.
    pub threshold: f64,
}

/// The round for subset `i` and local Pauli `q`.
pub fn make_round(instance: &ConsistencyInstance, i: usize, q: PauliString) -> Result<VerifierRound> {
    let subset = instance
        .layout()
        .subsets()
        .get(i)
        .ok_or_else(|| Error::Config(format!("subset index {} out of range", i + 1)))?
        .clone();
    if q.num_qubits() != subset.len() {
        return Err(Error::DimensionMismatch {
            expected: subset.len(),
            found: q.num_qubits(),
        });
    }
    let target = 0.5 + 0.5 * expectation(&instance.marginals()[i], &q)?;
    let threshold = instance.beta() / 4f64.powi(subset.len() as i32) / 2.0;
    Ok(VerifierRound {
        i,
        subset,
        q,
        target,
        threshold,
    })
}

/// `i` uniform over the subsets, `Q` uniform over all `4^{|C_i|}` strings
/// including the identity.
pub fn draw_round<R: Rng + ?Sized>(instance: &ConsistencyInstance, rng: &mut R) -> Result<VerifierRound> {
    let m = instance.layout().len();
    let i = rng.random_range(0..m);
    let c = instance.layout().subsets()[i].len();
    let code = rng.random_range(0..1usize << (2 * c));
    let q = PauliString::all(c)
        .nth(code)
        .expect("code is below 4^c");
    make_round(instance, i, q)
}

/// `1/2 + Tr((Q ⊗ I) σ)/2`.
pub fn acceptance_probability(sigma: &DensityMatrix, round: &VerifierRound) -> Result<f64> {
    let global = round.q.embed(&round.subset, sigma.num_qubits())?;
    Ok((0.5 + 0.5 * expectation(sigma, &global)?).clamp(0.0, 1.0))
}

/// `γ_Q = Tr((Q ⊗ I)σ) − Tr(Q ρ_i)` for every `Q` on `C_i`, in
/// [`PauliString::all`] order.
pub fn gammas(instance: &ConsistencyInstance, sigma: &DensityMatrix, i: usize) -> Result<Vec<(PauliString, f64)>> {
    check_witness(instance, sigma)?;
    let subset = &instance.layout().subsets()[i];
    let n = sigma.num_qubits();
    PauliString::all(subset.len())
        .map(|q| {
            let global = q.embed(subset, n)?;
            let g = expectation(sigma, &global)? - expectation(&instance.marginals()[i], &q)?;
            Ok((q, g))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    /// `max |γ_Q| / 2` over all rounds.
    pub gap: f64,
    /// Maximizing subset index (0-based).
    pub i: usize,
    pub q: PauliString,
}

/// Exhaustive maximum of `|acceptance − target|` over all rounds. Ties keep
/// the first round in subset-then-[`PauliString::all`] order.
pub fn verifier_gap(instance: &ConsistencyInstance, sigma: &DensityMatrix) -> Result<GapReport> {
    let mut best: Option<GapReport> = None;
    for i in 0..instance.layout().len() {
        for (q, g) in gammas(instance, sigma, i)? {
            let gap = g.abs() / 2.0;
            if best.as_ref().is_none_or(|b| gap > b.gap) {
                best = Some(GapReport { gap, i, q });
            }
        }
    }
    best.ok_or_else(|| Error::Config("instance has no subsets".into()))
}

/// Empirical acceptance for one `(i, Q)` pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundFrequency {
    pub i: usize,
    pub q: PauliString,
    pub draws: usize,
    pub accepts: usize,
    pub frequency: f64,
    pub probability: f64,
    pub target: f64,
}

/// Repeats one round `n` times with Bernoulli draws at its exact probability.
pub fn simulate_round<R: Rng + ?Sized>(
    sigma: &DensityMatrix,
    round: &VerifierRound,
    n: usize,
    rng: &mut R,
) -> Result<RoundFrequency> {
    if n == 0 {
        return Err(Error::Config("number of rounds must be at least 1".into()));
    }
    let p = acceptance_probability(sigma, round)?;
    let accepts = (0..n).filter(|_| rng.random::<f64>() < p).count();
    Ok(RoundFrequency {
        i: round.i,
        q: round.q.clone(),
        draws: n,
        accepts,
        frequency: accepts as f64 / n as f64,
        probability: p,
        target: round.target,
    })
}

/// Draws `n` rounds and tallies acceptances per `(i, Q)`, sorted by `(i, Q)`.
pub fn simulate_rounds<R: Rng + ?Sized>(
    instance: &ConsistencyInstance,
    sigma: &DensityMatrix,
    n: usize,
    rng: &mut R,
) -> Result<Vec<RoundFrequency>> {
    check_witness(instance, sigma)?;
    if n == 0 {
        return Err(Error::Config("number of rounds must be at least 1".into()));
    }
    let mut tally: BTreeMap<(usize, PauliString), RoundFrequency> = BTreeMap::new();
    for _ in 0..n {
        let round = draw_round(instance, rng)?;
        let entry = match tally.entry((round.i, round.q.clone())) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => e.insert(RoundFrequency {
                i: round.i,
                q: round.q.clone(),
                draws: 0,
                accepts: 0,
                frequency: 0.0,
                probability: acceptance_probability(sigma, &round)?,
                target: round.target,
            }),
        };
        entry.draws += 1;
        if rng.random::<f64>() < entry.probability {
            entry.accepts += 1;
        }
    }
    Ok(tally
        .into_values()
        .map(|mut f| {
            f.frequency = f.accepts as f64 / f.draws as f64;
            f
        })
        .collect())
}

fn check_witness(instance: &ConsistencyInstance, sigma: &DensityMatrix) -> Result<()> {
    if sigma.num_qubits() != instance.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: instance.num_qubits(),
            found: sigma.num_qubits(),
        });
    }
    Ok(())
}

//! Distance from a target expectation vector to the consistent set `K′`.
//!
//! Both solvers minimize `g(σ) = Σ_{P∈S} (Tr(Pσ) − α_P)²` over density
//! matrices and report `√g` at the best state found:
//!
//! * [`fw_distance`]: Frank-Wolfe. The linear subproblem over states is a
//!   minimum eigenvector of the gradient operator, and the quadratic objective
//!   admits an exact line search. The duality gap `⟨G, σ − vv†⟩` bounds the
//!   suboptimality, which also yields a certified lower bound on the distance.
//! * [`pg_distance`]: projected gradient with step `1/L`, projecting onto the
//!   state set by clipping the spectrum onto the probability simplex. Kept
//!   independent of the Frank-Wolfe path for cross-checking.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, Matrix};
use crate::marginal::{alphas_to_marginals, AlphaVector};
use crate::state::DensityMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub max_iters: usize,
    /// Stop once the duality gap falls to this value.
    pub gap_tol: f64,
    /// Stop once the distance falls to this value.
    pub dist_tol: f64,
    pub seed: u64,
    /// Keep per-iteration objective and gap values in the result.
    pub record_history: bool,
    /// Allow away steps from the eigen-atoms of the current iterate.
    pub away_steps: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            max_iters: 2000,
            gap_tol: 1e-8,
            dist_tol: 1e-7,
            seed: 0,
            record_history: false,
            away_steps: true,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.gap_tol > 0.0 && self.dist_tol > 0.0) {
            return Err(Error::Config("oracle tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Tightens the tolerances so the distance estimate resolves `β′/4`.
    pub fn for_threshold(&self, beta_prime: f64) -> Self {
        let quarter = beta_prime / 4.0;
        OracleConfig {
            dist_tol: self.dist_tol.min(quarter),
            gap_tol: self.gap_tol.min(0.5 * quarter * quarter),
            ..self.clone()
        }
    }

    fn check_threshold(&self, beta_prime: f64) -> Result<()> {
        self.validate()?;
        if !(beta_prime > 0.0) {
            return Err(Error::Config(format!(
                "beta_prime must be positive, got {beta_prime}"
            )));
        }
        let quarter = beta_prime / 4.0;
        if self.dist_tol > quarter {
            return Err(Error::Config(format!(
                "dist_tol {} exceeds beta_prime/4 = {quarter}",
                self.dist_tol
            )));
        }
        // sqrt(g) - sqrt(g*) <= sqrt(gap), so the gap must resolve beta'/4.
        if self.gap_tol.sqrt() > quarter {
            return Err(Error::Config(format!(
                "gap_tol {} too loose for beta_prime {beta_prime}",
                self.gap_tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub objective: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// `√g` at the witness.
    pub distance: f64,
    pub witness: DensityMatrix,
    /// Duality gap at the last evaluated iterate.
    pub fw_gap: f64,
    /// Certified lower bound on the true distance.
    pub lower_bound: f64,
    pub iters: usize,
    pub history: Vec<IterationRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Yes,
    No,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Yes => "YES",
            Decision::No => "NO",
        }
    }
}

fn check_state(alphas: &AlphaVector, sigma: &DensityMatrix) -> Result<()> {
    let n = alphas.basis().num_qubits();
    if sigma.num_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sigma.num_qubits(),
        });
    }
    Ok(())
}

/// `Tr(Pσ)` for every `P ∈ S`.
fn expectations(alphas: &AlphaVector, sigma: &Matrix) -> Vec<f64> {
    alphas
        .basis()
        .masks()
        .iter()
        .map(|m| m.trace_with(sigma).re)
        .collect()
}

fn residuals(alphas: &AlphaVector, sigma: &Matrix) -> Vec<f64> {
    expectations(alphas, sigma)
        .into_iter()
        .zip(alphas.values())
        .map(|(e, a)| e - a)
        .collect()
}

fn operator_from(alphas: &AlphaVector, weights: &[f64], scale: f64) -> HermitianMatrix {
    let dim = 1usize << alphas.basis().num_qubits();
    let mut g = Matrix::zeros(dim);
    for (mask, &w) in alphas.basis().masks().iter().zip(weights) {
        if w != 0.0 {
            mask.accumulate(&mut g, scale * w);
        }
    }
    HermitianMatrix::hermitian_part(&g)
}

/// `∇g(σ) = 2 Σ_{P∈S} (Tr(Pσ) − α_P) P`.
pub fn gradient_operator(sigma: &DensityMatrix, alphas: &AlphaVector) -> Result<HermitianMatrix> {
    check_state(alphas, sigma)?;
    let r = residuals(alphas, sigma.matrix().matrix());
    Ok(operator_from(alphas, &r, 2.0))
}

/// The distance `(Σ_P (Tr(Pσ) − α_P)²)^{1/2}` for a given state.
pub fn residual_distance(alphas: &AlphaVector, sigma: &DensityMatrix) -> Result<f64> {
    check_state(alphas, sigma)?;
    Ok(norm(&residuals(alphas, sigma.matrix().matrix())))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// When to stop early, beyond the tolerances in [`OracleConfig`].
#[derive(Clone, Copy, Debug)]
struct Stop {
    /// Stop as soon as the distance is certified on one side of this value.
    decide_at: Option<f64>,
}

fn frank_wolfe(
    alphas: &AlphaVector,
    cfg: &OracleConfig,
    start: &DensityMatrix,
    stop: Stop,
) -> Result<OracleResult> {
    cfg.validate()?;
    check_state(alphas, start)?;
    let masks = alphas.basis().masks();
    let mut sigma = start.matrix().matrix().clone();
    let mut exp = expectations(alphas, &sigma);
    let mut r: Vec<f64> = exp.iter().zip(alphas.values()).map(|(e, a)| e - a).collect();
    let mut history = Vec::new();
    let mut lower_sq = 0.0f64;
    let mut gap = f64::INFINITY;
    let mut iters = 0;

    while iters < cfg.max_iters {
        let g = dot(&r, &r);
        let dist = g.sqrt();
        if dist <= cfg.dist_tol {
            break;
        }
        if let Some(t) = stop.decide_at {
            if dist <= t || lower_sq.sqrt() > t {
                break;
            }
        }
        let grad = operator_from(alphas, &r, 2.0);
        let eig = grad.eigensystem()?;
        let v = eig.vector(0);
        // <G, σ> = 2 Σ r_P Tr(Pσ)
        gap = 2.0 * dot(&r, &exp) - eig.values[0];
        lower_sq = lower_sq.max(g - gap);
        if cfg.record_history {
            history.push(IterationRecord { objective: g, gap });
        }
        if gap <= cfg.gap_tol {
            break;
        }
        let mut atom = v;
        let mut sign = 1.0;
        let mut max_step = 1.0;
        if cfg.away_steps {
            // Away candidate: the eigenvector of σ with the largest <u|G|u>.
            let se = HermitianMatrix::hermitian_part(&sigma).eigensystem()?;
            let mut best: Option<(f64, usize)> = None;
            for (k, &lam) in se.values.iter().enumerate() {
                if lam <= 1e-14 || lam >= 1.0 - 1e-14 {
                    continue;
                }
                let u = se.vector(k);
                let gu: f64 = masks
                    .iter()
                    .zip(&r)
                    .map(|(m, ri)| 2.0 * ri * m.expectation_vec(&u))
                    .sum();
                if best.map_or(true, |(b, _)| gu > b) {
                    best = Some((gu, k));
                }
            }
            if let Some((gu, k)) = best {
                let fw_slope = 2.0 * dot(&r, &exp) - eig.values[0];
                let away_slope = gu - 2.0 * dot(&r, &exp);
                if away_slope > fw_slope {
                    let lam = se.values[k];
                    atom = se.vector(k);
                    sign = -1.0;
                    max_step = lam / (1.0 - lam);
                }
            }
        }
        // Direction in expectation space: sign·(Tr(P aa†) − Tr(Pσ)).
        let direction: Vec<f64> = masks
            .iter()
            .zip(&exp)
            .map(|(m, e)| sign * (m.expectation_vec(&atom) - e))
            .collect();
        let dd = dot(&direction, &direction);
        if dd <= 0.0 {
            break;
        }
        let eta = (-dot(&r, &direction) / dd).clamp(0.0, max_step);
        if eta == 0.0 {
            break;
        }
        let vertex = Matrix::outer(&atom);
        let mut next = sigma.scale(1.0 - sign * eta);
        next.add_scaled(&vertex, sign * eta);
        sigma = next;
        iters += 1;
        if iters % 64 == 0 {
            // Resynchronize the running expectations with the iterate.
            exp = expectations(alphas, &sigma);
        } else {
            for (e, dlt) in exp.iter_mut().zip(&direction) {
                *e += eta * dlt;
            }
        }
        for ((ri, e), a) in r.iter_mut().zip(&exp).zip(alphas.values()) {
            *ri = e - a;
        }
    }

    let witness = DensityMatrix::from_trusted(HermitianMatrix::hermitian_part(&sigma));
    let distance = residual_distance(alphas, &witness)?;
    Ok(OracleResult {
        distance,
        witness,
        fw_gap: gap,
        lower_bound: lower_sq.max(0.0).sqrt().min(distance),
        iters,
        history,
    })
}

/// Frank-Wolfe from the maximally mixed state.
pub fn fw_distance(alphas: &AlphaVector, cfg: &OracleConfig) -> Result<OracleResult> {
    let start = DensityMatrix::maximally_mixed(alphas.basis().num_qubits());
    frank_wolfe(alphas, cfg, &start, Stop { decide_at: None })
}

/// Frank-Wolfe from an arbitrary starting state.
pub fn fw_distance_from(
    alphas: &AlphaVector,
    cfg: &OracleConfig,
    start: &DensityMatrix,
) -> Result<OracleResult> {
    frank_wolfe(alphas, cfg, start, Stop { decide_at: None })
}

/// The state `I/2^n + 2^{-n} Σ α_P P` projected onto density matrices: exact
/// when the target is strictly inside `K′`, and a good start near its boundary.
pub fn warm_start(alphas: &AlphaVector) -> Result<DensityMatrix> {
    project_to_states(&alphas.linear_witness())
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm.
pub fn project_to_states(m: &HermitianMatrix) -> Result<DensityMatrix> {
    let eig = m.eigensystem()?;
    let w = project_to_simplex(&eig.values);
    Ok(DensityMatrix::from_trusted(eig.reconstruct_with(&w)))
}

/// Projected gradient descent from the maximally mixed state.
pub fn pg_distance(alphas: &AlphaVector, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let n = alphas.basis().num_qubits();
    if n > 8 {
        return Err(Error::InvalidQubitCount(n));
    }
    // Hessian of g is bounded by 2·2^n in the Frobenius geometry.
    let step = 1.0 / (2.0 * (1u64 << n) as f64);
    let mut sigma = DensityMatrix::maximally_mixed(n);
    let mut history = Vec::new();
    let mut lower_sq = 0.0f64;
    let mut gap = f64::INFINITY;
    let mut iters = 0;
    while iters < cfg.max_iters {
        let exp = expectations(alphas, sigma.matrix().matrix());
        let r: Vec<f64> = exp.iter().zip(alphas.values()).map(|(e, a)| e - a).collect();
        let g = dot(&r, &r);
        if g.sqrt() <= cfg.dist_tol {
            break;
        }
        let grad = operator_from(alphas, &r, 2.0);
        let lambda_min = grad.eigensystem()?.values[0];
        gap = 2.0 * dot(&r, &exp) - lambda_min;
        lower_sq = lower_sq.max(g - gap);
        if cfg.record_history {
            history.push(IterationRecord { objective: g, gap });
        }
        if gap <= cfg.gap_tol {
            break;
        }
        let mut moved = sigma.matrix().clone();
        moved.add_scaled(&grad, -step);
        sigma = project_to_states(&moved)?;
        iters += 1;
    }
    let distance = residual_distance(alphas, &sigma)?;
    Ok(OracleResult {
        distance,
        witness: sigma,
        fw_gap: gap,
        lower_bound: lower_sq.max(0.0).sqrt().min(distance),
        iters,
        history,
    })
}

/// Result of a membership query with its supporting evidence.
#[derive(Clone, Debug)]
pub struct MembershipOutcome {
    pub decision: Decision,
    /// Distance achieved by `witness`, when one was formed.
    pub distance: f64,
    /// Certified lower bound on the true distance.
    pub lower_bound: f64,
    pub witness: Option<DensityMatrix>,
    pub iters: usize,
}

/// Decides `α ∈ K′` with promise gap `β′`: YES iff the distance estimate is at
/// most `β′/2`.
pub fn membership(alphas: &AlphaVector, beta_prime: f64, cfg: &OracleConfig) -> Result<Decision> {
    Ok(membership_with_hint(alphas, beta_prime, cfg, None)?.decision)
}

/// [`membership`] with an optional nearby state to start from.
///
/// Before running Frank-Wolfe the query tries certificates that settle the
/// answer exactly:
/// * an entry with `|α_P| − 1 > β′/2` forces distance above the threshold;
/// * the hint (or `I/2^n`) shifted by `2^{-n} Σ (α_P − Tr(P·hint)) P` has
///   exactly the target coordinates, so if it is positive semidefinite the
///   distance is zero;
/// * a reconstructed marginal with eigenvalue `λ < 0` on `c` qubits forces
///   distance at least `2^{c/2}·|λ|`.
///
/// Frank-Wolfe then starts from the projection of the shifted state and stops
/// as soon as either side of `β′/2` is certified.
pub fn membership_with_hint(
    alphas: &AlphaVector,
    beta_prime: f64,
    cfg: &OracleConfig,
    hint: Option<&DensityMatrix>,
) -> Result<MembershipOutcome> {
    cfg.check_threshold(beta_prime)?;
    let threshold = beta_prime / 2.0;
    let n = alphas.basis().num_qubits();
    let dim = 1usize << n;

    let excess = alphas.max_abs() - 1.0;
    if excess > threshold {
        return Ok(MembershipOutcome {
            decision: Decision::No,
            distance: f64::INFINITY,
            lower_bound: excess,
            witness: None,
            iters: 0,
        });
    }

    let shifted = match hint {
        Some(h) => {
            check_state(alphas, h)?;
            let r = residuals(alphas, h.matrix().matrix());
            let mut m = h.matrix().clone();
            m.add_scaled(&operator_from(alphas, &r, 1.0), -1.0 / dim as f64);
            m
        }
        None => alphas.linear_witness(),
    };
    if shifted.is_positive_definite(0.0) {
        let witness = DensityMatrix::from_trusted(shifted.clone());
        let distance = residual_distance(alphas, &witness)?;
        if distance <= threshold {
            return Ok(MembershipOutcome {
                decision: Decision::Yes,
                distance,
                lower_bound: 0.0,
                witness: Some(witness),
                iters: 0,
            });
        }
    }
    let eig = shifted.eigensystem()?;
    if eig.values[0] >= 0.0 {
        let witness = DensityMatrix::from_trusted(shifted);
        let distance = residual_distance(alphas, &witness)?;
        if distance <= threshold {
            return Ok(MembershipOutcome {
                decision: Decision::Yes,
                distance,
                lower_bound: 0.0,
                witness: Some(witness),
                iters: 0,
            });
        }
    }
    let projected = DensityMatrix::from_trusted(eig.reconstruct_with(&project_to_simplex(&eig.values)));
    let projected_distance = residual_distance(alphas, &projected)?;
    if projected_distance <= threshold {
        return Ok(MembershipOutcome {
            decision: Decision::Yes,
            distance: projected_distance,
            lower_bound: 0.0,
            witness: Some(projected),
            iters: 0,
        });
    }

    let mut local_bound = 0.0f64;
    for (subset, rec) in alphas
        .basis()
        .layout()
        .subsets()
        .iter()
        .zip(alphas_to_marginals(alphas)?)
    {
        if rec.min_eigenvalue < 0.0 {
            let scale = ((1u64 << subset.len()) as f64).sqrt();
            local_bound = local_bound.max(scale * -rec.min_eigenvalue);
        }
    }
    if local_bound > threshold {
        return Ok(MembershipOutcome {
            decision: Decision::No,
            distance: projected_distance,
            lower_bound: local_bound,
            witness: Some(projected),
            iters: 0,
        });
    }

    let res = frank_wolfe(
        alphas,
        cfg,
        &projected,
        Stop {
            decide_at: Some(threshold),
        },
    )?;
    let lower_bound = res.lower_bound.max(local_bound).max(excess);
    let decision = if res.distance <= threshold && lower_bound <= threshold {
        Decision::Yes
    } else {
        Decision::No
    };
    Ok(MembershipOutcome {
        decision,
        distance: res.distance,
        lower_bound,
        witness: Some(res.witness),
        iters: res.iters,
    })
}

/// The minimum-eigenvector state of `H`, used by tests and generators.
pub fn ground_state(h: &HermitianMatrix) -> Result<DensityMatrix> {
    let eig = h.eigensystem()?;
    let v: Vec<Complex64> = eig.vector(0);
    DensityMatrix::from_pure(&v)
}

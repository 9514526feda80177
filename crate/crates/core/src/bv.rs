//! Convex feasibility by random-walk sampling: ball-walk samples of the
//! current region, their centroid, and objective cuts through the centroid.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership access to a convex body.
///
/// An accepted point comes with a certificate, and a certificate from a
/// nearby point may be passed back in to speed up the next query.
pub trait MembershipOracle {
    type Certificate: Clone;

    fn certify(&self, x: &[f64], near: Option<&Self::Certificate>) -> Result<Option<Self::Certificate>>;
}

/// A membership predicate given by a closure.
#[derive(Clone)]
pub struct PredicateOracle<F>(pub F);

impl<F: Fn(&[f64]) -> bool> MembershipOracle for PredicateOracle<F> {
    type Certificate = ();

    fn certify(&self, x: &[f64], _near: Option<&()>) -> Result<Option<()>> {
        Ok((self.0)(x).then_some(()))
    }
}

/// `f(x) = c + g·x`.
pub trait LinearObjective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self) -> &[f64];
}

/// An explicit affine function.
#[derive(Clone, Debug)]
pub struct Affine {
    pub constant: f64,
    pub gradient: Vec<f64>,
}

impl LinearObjective for Affine {
    fn value(&self, x: &[f64]) -> f64 {
        self.constant + dot(&self.gradient, x)
    }

    fn gradient(&self) -> &[f64] {
        &self.gradient
    }
}

/// The half-space `{x : normal·x ≤ offset}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cut {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Cut {
    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.normal, x) <= self.offset
    }
}

/// A base body intersected with cuts.
#[derive(Clone)]
pub struct FeasibleRegion<O> {
    base: O,
    dim: usize,
    cuts: Vec<Cut>,
    outer_radius: f64,
    inner_radius: f64,
}

impl<O: MembershipOracle> FeasibleRegion<O> {
    /// Radii default to `√d` and `1/√d`.
    pub fn new(base: O, dim: usize) -> Self {
        let d = dim.max(1) as f64;
        FeasibleRegion {
            base,
            dim,
            cuts: Vec::new(),
            outer_radius: d.sqrt(),
            inner_radius: 1.0 / d.sqrt(),
        }
    }

    pub fn with_radii(mut self, outer: f64, inner: f64) -> Self {
        self.outer_radius = outer;
        self.inner_radius = inner;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// Cuts are checked first; the base oracle only sees points inside them.
    pub fn certify(&self, x: &[f64], near: Option<&O::Certificate>) -> Result<Option<O::Certificate>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if !self.cuts.iter().all(|c| c.contains(x)) {
            return Ok(None);
        }
        self.base.certify(x, near)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.certify(x, None)?.is_some())
    }

    fn push_cut(&mut self, g: &[f64], z: &[f64]) -> Result<()> {
        if g.len() != self.dim || z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: if g.len() != self.dim { g.len() } else { z.len() },
            });
        }
        if g.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroNormal);
        }
        self.cuts.push(Cut {
            normal: g.to_vec(),
            offset: dot(g, z),
        });
        Ok(())
    }
}

impl<O: MembershipOracle + Clone> FeasibleRegion<O> {
    /// The region intersected with `{x : g·x ≤ g·z}`.
    pub fn add_cut(&self, g: &[f64], z: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.push_cut(g, z)?;
        Ok(next)
    }
}

/// A member point with its certificate.
#[derive(Clone, Debug)]
pub struct WalkPoint<C> {
    pub x: Vec<f64>,
    pub cert: C,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Step radius; `None` means `r_min/√d`.
    pub delta: Option<f64>,
    /// Ball-walk steps between retained samples; `None` means `d`.
    pub mix_steps: Option<usize>,
    /// Samples per centroid.
    pub samples: usize,
    /// Round cap; `None` means `10·d`.
    pub max_rounds: Option<usize>,
    /// Consecutive rejected proposals after which the region counts as empty.
    pub max_rejections: usize,
    /// A round whose acceptance rate falls below this also counts as empty;
    /// zero disables the check.
    pub min_acceptance: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            delta: None,
            mix_steps: None,
            samples: 20,
            max_rounds: None,
            max_rejections: 5000,
            min_acceptance: 0.01,
            seed: 0,
        }
    }
}

/// A [`WalkConfig`] with every default filled in for a given region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedWalk {
    pub delta: f64,
    pub mix_steps: usize,
    pub samples: usize,
    pub max_rounds: usize,
    pub max_rejections: usize,
    pub min_acceptance: f64,
}

impl WalkConfig {
    pub fn resolve(&self, dim: usize, inner_radius: f64) -> Result<ResolvedWalk> {
        let d = dim.max(1);
        let r = ResolvedWalk {
            delta: self
                .delta
                .unwrap_or(inner_radius / (d as f64).sqrt()),
            mix_steps: self.mix_steps.unwrap_or(d),
            samples: self.samples,
            max_rounds: self.max_rounds.unwrap_or(10 * d),
            max_rejections: self.max_rejections,
            min_acceptance: self.min_acceptance,
        };
        if !(0.0..1.0).contains(&r.min_acceptance) {
            return Err(Error::Config(format!(
                "min_acceptance must lie in [0, 1), got {}",
                r.min_acceptance
            )));
        }
        if !(r.delta > 0.0 && r.delta.is_finite()) {
            return Err(Error::Config(format!("delta must be positive, got {}", r.delta)));
        }
        if r.mix_steps < 1 || r.samples < 1 || r.max_rounds < 1 || r.max_rejections < 1 {
            return Err(Error::Config("walk counts must be at least 1".into()));
        }
        Ok(r)
    }
}

/// Proposal bookkeeping for one stretch of walking.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WalkStats {
    pub proposals: usize,
    pub accepted: usize,
    /// Longest run of consecutive rejections.
    pub longest_rejection_run: usize,
    /// Rejections before the first acceptance.
    pub leading_rejections: usize,
    /// Rejections after the last acceptance.
    pub trailing_rejections: usize,
}

impl WalkStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// A point uniform in the ball of radius `delta` around `x`.
pub fn ball_proposal<R: Rng + ?Sized>(x: &[f64], delta: f64, rng: &mut R) -> Vec<f64> {
    let d = x.len();
    let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let len = dot(&dir, &dir).sqrt();
    let u: f64 = rng.random();
    let radius = delta * u.powf(1.0 / d as f64);
    x.iter()
        .zip(&dir)
        .map(|(xi, di)| if len > 0.0 { xi + radius * di / len } else { *xi })
        .collect()
}

/// One ball-walk move: the proposal if it is a member, otherwise `x`.
pub fn ball_walk_step<O: MembershipOracle, R: Rng + ?Sized>(
    x: &WalkPoint<O::Certificate>,
    region: &FeasibleRegion<O>,
    delta: f64,
    rng: &mut R,
) -> Result<(WalkPoint<O::Certificate>, bool)> {
    if delta == 0.0 {
        return Ok((x.clone(), false));
    }
    let y = ball_proposal(&x.x, delta, rng);
    match region.certify(&y, Some(&x.cert))? {
        Some(cert) => Ok((WalkPoint { x: y, cert }, true)),
        None => Ok((x.clone(), false)),
    }
}

/// `samples` points, each `mix_steps` moves after the previous one.
pub fn sample_points<O: MembershipOracle, R: Rng + ?Sized>(
    region: &FeasibleRegion<O>,
    start: &WalkPoint<O::Certificate>,
    samples: usize,
    mix_steps: usize,
    delta: f64,
    rng: &mut R,
) -> Result<(Vec<WalkPoint<O::Certificate>>, WalkStats)> {
    let mut stats = WalkStats::default();
    let mut run = 0;
    let mut out = Vec::with_capacity(samples);
    let mut cur = start.clone();
    for _ in 0..samples {
        for _ in 0..mix_steps {
            let (next, moved) = ball_walk_step(&cur, region, delta, rng)?;
            stats.proposals += 1;
            if moved {
                if stats.accepted == 0 {
                    stats.leading_rejections = run;
                }
                stats.accepted += 1;
                run = 0;
            } else {
                run += 1;
                stats.longest_rejection_run = stats.longest_rejection_run.max(run);
            }
            cur = next;
        }
        out.push(cur.clone());
    }
    if stats.accepted == 0 {
        stats.leading_rejections = run;
    }
    stats.trailing_rejections = run;
    Ok((out, stats))
}

/// Coordinate-wise mean.
pub fn centroid(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = points.first().ok_or(Error::EmptyPointSet)?;
    let mut z = vec![0.0; first.len()];
    for p in points {
        if p.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                found: p.len(),
            });
        }
        for (zi, pi) in z.iter_mut().zip(p) {
            *zi += pi;
        }
    }
    let k = points.len() as f64;
    z.iter_mut().for_each(|zi| *zi /= k);
    Ok(z)
}

/// One sample-centroid-cut round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub centroid: Vec<f64>,
    pub objective: f64,
    pub cut_normal: Vec<f64>,
    pub acceptance_rate: f64,
    /// Samples kept from the previous round.
    pub retained: usize,
}

#[derive(Clone, Debug)]
pub enum Verdict<C> {
    Feasible(WalkPoint<C>),
    Infeasible,
}

impl<C> Verdict<C> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Threshold,
    MaxRounds,
    Stagnation,
    LowAcceptance,
    ConstantObjective,
}

#[derive(Clone, Debug)]
pub struct FeasibilityResult<C> {
    pub verdict: Verdict<C>,
    pub rounds: usize,
    pub reason: StopReason,
    pub transcript: Vec<RoundRecord>,
}

/// Searches the region for a point with `f(x) ≤ t`.
///
/// Each round tops the retained samples up to `samples` by walking on from
/// the last one (always drawing at least one fresh sample and dropping the
/// oldest), takes their centroid `z`, and stops if `z` is a member with
/// `f(z) ≤ t`. A sample with `f ≤ t` is also accepted, being a certified
/// member. Otherwise the cut `g·x ≤ g·z` is added and the samples satisfying
/// it are retained for the next round; if none do, the walk restarts at `z`.
pub fn feasibility_solve<O, F, R>(
    region: &FeasibleRegion<O>,
    f: &F,
    t: f64,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<FeasibilityResult<O::Certificate>>
where
    O: MembershipOracle + Clone,
    F: LinearObjective,
    R: Rng + ?Sized,
{
    let walk = cfg.resolve(region.dim(), region.inner_radius())?;
    let origin = vec![0.0; region.dim()];
    let cert = region.base().certify(&origin, None)?.ok_or_else(|| {
        Error::Config("the origin is not a member of the base region".into())
    })?;
    let g = f.gradient().to_vec();
    let mut region = region.clone();
    let mut pool = vec![WalkPoint { x: origin, cert }];
    let mut transcript = Vec::new();
    let mut retained = 0;
    // Rejections since the last accepted proposal, across rounds.
    let mut streak = 0;

    for round in 0..walk.max_rounds {
        let start = pool.last().expect("pool is never empty").clone();
        let missing = walk.samples.saturating_sub(pool.len()).max(1);
        let (fresh, stats) = sample_points(&region, &start, missing, walk.mix_steps, walk.delta, rng)?;
        pool.extend(fresh);
        if pool.len() > walk.samples {
            pool.drain(..pool.len() - walk.samples);
        }
        let xs: Vec<Vec<f64>> = pool.iter().map(|p| p.x.clone()).collect();
        let z = centroid(&xs)?;
        let fz = f.value(&z);
        transcript.push(RoundRecord {
            round,
            centroid: z.clone(),
            objective: fz,
            cut_normal: g.clone(),
            acceptance_rate: stats.acceptance_rate(),
            retained,
        });

        let z_cert = region.certify(&z, Some(&start.cert))?;
        if fz <= t {
            if let Some(cert) = z_cert.clone() {
                return Ok(done(Verdict::Feasible(WalkPoint { x: z, cert }), round + 1, StopReason::Threshold, transcript));
            }
        }
        if let Some(best) = pool
            .iter()
            .filter(|p| f.value(&p.x) <= t)
            .min_by(|a, b| f.value(&a.x).total_cmp(&f.value(&b.x)))
        {
            return Ok(done(Verdict::Feasible(best.clone()), round + 1, StopReason::Threshold, transcript));
        }
        let longest = stats.longest_rejection_run.max(streak + stats.leading_rejections);
        streak = if stats.accepted == 0 {
            streak + stats.proposals
        } else {
            stats.trailing_rejections
        };
        if longest >= walk.max_rejections {
            return Ok(done(Verdict::Infeasible, round + 1, StopReason::Stagnation, transcript));
        }
        if stats.proposals > 0 && stats.acceptance_rate() < walk.min_acceptance {
            return Ok(done(Verdict::Infeasible, round + 1, StopReason::LowAcceptance, transcript));
        }
        if stats.proposals > 0 && stats.acceptance_rate() < walk.min_acceptance {
            return Ok(done(Verdict::Infeasible, round + 1, StopReason::LowAcceptance, transcript));
        }
        if g.iter().all(|&v| v == 0.0) {
            return Ok(done(Verdict::Infeasible, round + 1, StopReason::ConstantObjective, transcript));
        }

        region.push_cut(&g, &z)?;
        let cut = region.cuts().last().expect("just pushed");
        pool.retain(|p| cut.contains(&p.x));
        retained = pool.len();
        if pool.is_empty() {
            match z_cert {
                Some(cert) => pool.push(WalkPoint { x: z, cert }),
                None => {
                    return Ok(done(Verdict::Infeasible, round + 1, StopReason::Stagnation, transcript));
                }
            }
        }
    }
    Ok(done(Verdict::Infeasible, walk.max_rounds, StopReason::MaxRounds, transcript))
}

fn done<C>(verdict: Verdict<C>, rounds: usize, reason: StopReason, transcript: Vec<RoundRecord>) -> FeasibilityResult<C> {
    FeasibilityResult {
        verdict,
        rounds,
        reason,
        transcript,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

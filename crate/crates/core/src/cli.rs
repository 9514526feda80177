//! Command-line interface. [`execute`] runs a parsed command and returns the
//! report text and exit code; the binary only handles files and streams.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::generate::{bell_triangle, consistent_instance, named_state, prime_no_instance, random_layout, singlet_triangle};
use crate::hamiltonian::{min_eigenvalue, random_lh, LocalHamiltonianInstance, Promise};
use crate::io::{self, AnyConsistency};
use crate::marginal::{consistency_from_prime, marginals_to_alphas, AlphaVector, ConsistencyInstance, ConsistencyPrimeInstance, PrimeMapping};
use crate::oracle::{fw_distance_from, pg_distance, warm_start, Decision, OracleConfig};
use crate::pauli::{local_pauli_set, Layout};
use crate::reduction::{amplified, ReductionConfig};
use crate::state::random_mixed;
use crate::verifier::{simulate_rounds, verifier_gap};

#[derive(Debug, Parser)]
#[command(name = "qmarginal", version, about = "Quantum marginal consistency, its oracle, and the Local Hamiltonian reduction")]
pub struct Cli {
    /// Master seed; defaults to `walk.seed` from the config (0 unless set).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file overriding oracle and walk settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// `check`: also run projected gradient.
    #[arg(long, global = true)]
    pub brute_force: bool,
    /// `reduce`: also diagonalize exactly and compare.
    #[arg(long, global = true)]
    pub ground_truth: bool,
    /// Independent reduction runs for the majority vote (odd).
    #[arg(long, global = true, default_value_t = 1)]
    pub runs: usize,
    /// Write the report or instance here instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// `reduce`: write per-round records as JSON lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub transcript: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance or state file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Decide a consistency instance (either form).
    Check { instance: PathBuf },
    /// Decide a Local Hamiltonian instance through the reduction.
    Reduce { instance: PathBuf },
    /// Verifier gap of a witness state against a consistency instance.
    Verify {
        instance: PathBuf,
        witness: PathBuf,
        /// Also simulate this many verifier rounds.
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Generate random promise instances and score the reduction on them.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PromiseArg {
    Yes,
    No,
}

impl From<PromiseArg> for Promise {
    fn from(p: PromiseArg) -> Self {
        match p {
            PromiseArg::Yes => Promise::Yes,
            PromiseArg::No => Promise::No,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    SingletTriangle,
    BellTriangle,
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Random Local Hamiltonian promise instance.
    Lh {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.2)]
        gap: f64,
        #[arg(long, value_enum)]
        promise: PromiseArg,
    },
    /// Consistency instance from a preset, a named state, or a random state.
    Consistency {
        #[arg(long, value_enum, conflicts_with_all = ["from_state", "subsets"])]
        preset: Option<Preset>,
        /// ghz, w, zero or mixed.
        #[arg(long, requires = "subsets")]
        from_state: Option<String>,
        /// 1-based subsets such as "1,2;2,3".
        #[arg(long)]
        subsets: Option<String>,
        /// Qubit count; defaults to the largest qubit in --subsets.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        /// Bell-triangle visibility.
        #[arg(long, default_value_t = 0.9)]
        visibility: f64,
    },
    /// Consistency′ instance in Pauli coordinates.
    Prime {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum)]
        promise: PromiseArg,
        /// β′ of YES instances.
        #[arg(long, default_value_t = 0.1)]
        beta_prime: f64,
        /// How far NO instances are pushed outside `[-1, 1]`; also their β′.
        #[arg(long, default_value_t = 0.2)]
        push: f64,
    },
    /// Global state file for `verify`.
    State {
        #[arg(long)]
        n: usize,
        /// ghz, w, zero or mixed; random when omitted.
        #[arg(long)]
        from_state: Option<String>,
        #[arg(long)]
        rank: Option<usize>,
    },
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.2)]
    pub gap: f64,
    /// Number of instances, alternating YES and NO.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: String,
    pub exit_code: i32,
    /// Wall-clock seconds per stage, for stderr only.
    pub timings: Vec<(String, f64)>,
    /// JSON lines, when the command keeps a transcript.
    pub transcript: Option<String>,
}

fn exit_for(d: Decision) -> i32 {
    match d {
        Decision::Yes => 0,
        Decision::No => 1,
    }
}

pub fn load_config(path: Option<&Path>) -> Result<ReductionConfig> {
    match path {
        None => Ok(ReductionConfig::default()),
        Some(p) => {
            let text = io::read_text(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", p.display())))
        }
    }
}

/// Parses "1,2;2,3" into 0-based subsets.
pub fn parse_subsets(spec: &str) -> Result<Vec<Vec<usize>>> {
    spec.split(';')
        .map(|group| {
            group
                .split(',')
                .map(|q| match q.trim().parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(Error::Config(format!("bad qubit {q:?} in subsets {spec:?}; qubits are numbered from 1"))),
                })
                .collect()
        })
        .collect()
}

struct Timer(Vec<(String, f64)>);

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((stage.to_string(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Runs `cli`. `echo` is recorded in reports as the command line.
pub fn execute(cli: &Cli, echo: &str) -> Result<Outcome> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(cfg.walk.seed);
    let mut timer = Timer(Vec::new());
    let mut transcript = None;
    let (value, exit_code) = match &cli.command {
        Command::Gen { kind } => (timer.time("gen", || cmd_gen(kind, seed))?, 0),
        Command::Check { instance } => {
            let text = io::read_text(instance)?;
            let parsed = timer.time("parse", || io::parse_any_consistency(&text))?;
            let (mut report, decision) = timer.time("check", || cmd_check(&parsed, &cfg.oracle, cli.brute_force))?;
            add_header(&mut report, echo, seed);
            (report, exit_for(decision))
        }
        Command::Reduce { instance } => {
            let text = io::read_text(instance)?;
            let lh = timer.time("parse", || io::parse_lh(&text))?;
            let (mut report, decision, lines) = timer.time("reduce", || cmd_reduce(&lh, &cfg, cli.runs, seed, cli.ground_truth))?;
            add_header(&mut report, echo, seed);
            transcript = Some(lines);
            (report, exit_for(decision))
        }
        Command::Verify { instance, witness, rounds } => {
            let inst = timer.time("parse", || -> Result<_> {
                let inst = trace_form(io::parse_any_consistency(&io::read_text(instance)?)?)?;
                let sigma = io::parse_state(&io::read_text(witness)?)?;
                Ok((inst, sigma))
            })?;
            let mut report = timer.time("verify", || cmd_verify(&inst.0, &inst.1, *rounds, seed))?;
            add_header(&mut report, echo, seed);
            (report, 0)
        }
        Command::Bench(args) => {
            let res = run_bench(args, &cfg, cli.runs, seed, &mut |j, secs| {
                timer.0.push((format!("instance {}", j + 1), secs));
            })?;
            let mut report = res.to_value();
            add_header(&mut report, echo, seed);
            (report, 0)
        }
    };
    Ok(Outcome {
        report: io::to_canonical_string(&value),
        exit_code,
        timings: timer.0,
        transcript,
    })
}

fn add_header(report: &mut Value, echo: &str, seed: u64) {
    if let Value::Object(map) = report {
        map.insert("command".into(), json!(echo));
        map.insert("seed".into(), json!(seed));
    }
}

fn cmd_gen(kind: &GenKind, seed: u64) -> Result<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        GenKind::Lh { n, m, k, gap, promise } => {
            Ok(io::lh_value(&random_lh(&mut rng, *n, *m, *k, *gap, (*promise).into())?))
        }
        GenKind::Consistency { preset, from_state, subsets, n, m, k, beta, visibility } => {
            let inst = match (preset, from_state, subsets) {
                (Some(Preset::SingletTriangle), _, _) => singlet_triangle(),
                (Some(Preset::BellTriangle), _, _) => bell_triangle(&mut rng, *visibility)?.instance,
                (None, Some(name), Some(spec)) => {
                    let subsets = parse_subsets(spec)?;
                    let widest = subsets.iter().flatten().max().map_or(0, |q| q + 1);
                    let n = n.unwrap_or(widest);
                    let layout = Layout::new(n, subsets)?;
                    crate::marginal::marginals_of_state(&named_state(name, n)?, &layout, *beta)?
                }
                (None, None, spec) => {
                    let n = n.ok_or_else(|| Error::Config("--n is required for random instances".into()))?;
                    let layout = match spec {
                        Some(spec) => Layout::new(n, parse_subsets(spec)?)?,
                        None => {
                            let (m, k) = m.zip(*k).ok_or_else(|| Error::Config("give --subsets or both --m and --k".into()))?;
                            random_layout(&mut rng, n, m, k)?
                        }
                    };
                    consistent_instance(&mut rng, &layout, *beta)?.0
                }
                (None, Some(_), None) => unreachable!("clap requires --subsets with --from-state"),
            };
            Ok(io::consistency_value(&inst))
        }
        GenKind::Prime { n, m, k, promise, beta_prime, push } => {
            let layout = random_layout(&mut rng, *n, *m, *k)?;
            let basis = Arc::new(local_pauli_set(&layout));
            let inst = match promise {
                PromiseArg::Yes => {
                    let sigma = random_mixed(&mut rng, *n, None)?;
                    ConsistencyPrimeInstance::new(AlphaVector::from_state(basis, &sigma)?, *beta_prime)?
                }
                PromiseArg::No => prime_no_instance(&mut rng, &basis, *push)?,
            };
            Ok(io::prime_value(&inst))
        }
        GenKind::State { n, from_state, rank } => {
            let sigma = match from_state {
                Some(name) => named_state(name, *n)?,
                None => random_mixed(&mut rng, *n, *rank)?,
            };
            Ok(io::state_value(&sigma))
        }
    }
}

/// Converts a trace-form instance to Pauli coordinates. Any global state
/// satisfies `‖α(σ) − α‖₂ ≥ max_i ‖σ_i − ρ_i‖₁`, so the trace gap `β` carries
/// over as `β′ = β`. Overlaps that disagree rule out a YES instance.
pub fn to_prime(inst: &ConsistencyInstance) -> Result<std::result::Result<ConsistencyPrimeInstance, Value>> {
    let basis = Arc::new(local_pauli_set(inst.layout()));
    match marginals_to_alphas(inst, &basis) {
        Ok(alphas) => Ok(Ok(ConsistencyPrimeInstance::new(alphas, inst.beta())?)),
        Err(Error::OverlapMismatch { first, second, pauli, deviation }) => Ok(Err(json!({
            "first": first + 1,
            "second": second + 1,
            "pauli": pauli,
            "deviation": deviation,
        }))),
        Err(e) => Err(e),
    }
}

fn trace_form(any: AnyConsistency) -> Result<ConsistencyInstance> {
    match any {
        AnyConsistency::Trace(inst) => Ok(inst),
        AnyConsistency::Prime(p) => match consistency_from_prime(&p)? {
            PrimeMapping::Instance(inst) => Ok(inst),
            PrimeMapping::NonPsd { subset, min_eigenvalue, .. } => Err(Error::Config(format!(
                "marginal {} reconstructed from alphas has eigenvalue {min_eigenvalue:.3e}; no witness can match it",
                subset + 1
            ))),
        },
    }
}

/// Oracle decision plus report. YES iff the Frank-Wolfe distance, started
/// from [`warm_start`], is at most `β′/2`.
pub fn cmd_check(parsed: &AnyConsistency, oracle: &OracleConfig, brute_force: bool) -> Result<(Value, Decision)> {
    let (form, prime) = match parsed {
        AnyConsistency::Prime(p) => ("prime", p.clone()),
        AnyConsistency::Trace(inst) => match to_prime(inst)? {
            Ok(p) => ("trace", p),
            Err(mismatch) => {
                let report = json!({
                    "form": "trace",
                    "beta_prime": inst.beta(),
                    "decision": Decision::No.as_str(),
                    "distance": null,
                    "lower_bound": null,
                    "iters": 0,
                    "fw_gap": null,
                    "overlap_mismatch": mismatch,
                    "brute_force": null,
                });
                return Ok((report, Decision::No));
            }
        },
    };
    let beta_prime = prime.beta_prime();
    let cfg = oracle.for_threshold(beta_prime);
    let fw = fw_distance_from(prime.alphas(), &cfg, &warm_start(prime.alphas())?)?;
    let decide = |d: f64| if d <= beta_prime / 2.0 { Decision::Yes } else { Decision::No };
    let decision = decide(fw.distance);
    let brute = if brute_force {
        let pg = pg_distance(prime.alphas(), &cfg)?;
        json!({"distance": pg.distance, "decision": decide(pg.distance).as_str(), "iters": pg.iters})
    } else {
        Value::Null
    };
    let report = json!({
        "form": form,
        "beta_prime": beta_prime,
        "decision": decision.as_str(),
        "distance": fw.distance,
        "lower_bound": fw.lower_bound,
        "iters": fw.iters,
        "fw_gap": fw.fw_gap,
        "overlap_mismatch": null,
        "brute_force": brute,
    });
    Ok((report, decision))
}

/// Which side of the promise `λ_min` falls on, `None` inside the gap.
pub fn promise_side(lh: &LocalHamiltonianInstance, lambda: f64) -> Option<Decision> {
    const TOL: f64 = 1e-9;
    if lambda <= lh.a() + TOL {
        Some(Decision::Yes)
    } else if lambda >= lh.b() - TOL {
        Some(Decision::No)
    } else {
        None
    }
}

pub fn cmd_reduce(
    lh: &LocalHamiltonianInstance,
    cfg: &ReductionConfig,
    runs: usize,
    seed: u64,
    ground_truth: bool,
) -> Result<(Value, Decision, String)> {
    let amp = amplified(lh, cfg, runs, seed)?;
    let mut lines = String::new();
    for (j, run) in amp.runs.iter().enumerate() {
        for rec in &run.transcript {
            let mut v = serde_json::to_value(rec)?;
            v["run"] = json!(j);
            lines.push_str(&io::to_canonical_line(&v));
        }
    }
    let witness = amp
        .runs
        .iter()
        .find(|r| amp.answer == Decision::Yes && r.answer == Decision::Yes)
        .and_then(|r| r.witness.as_ref())
        .map(io::alphas_value)
        .unwrap_or(Value::Null);
    let (truth, side, agrees) = if ground_truth {
        let lambda = min_eigenvalue(lh)?;
        let side = promise_side(lh, lambda);
        (
            json!(lambda),
            side.map_or(json!("GAP"), |d| json!(d.as_str())),
            side.map_or(Value::Null, |d| json!(d == amp.answer)),
        )
    } else {
        (Value::Null, Value::Null, Value::Null)
    };
    let run_reports: Vec<Value> = amp
        .runs
        .iter()
        .map(|r| {
            json!({
                "answer": r.answer.as_str(),
                "rounds_used": r.rounds_used,
                "reason": r.reason,
                "witness_energy": r.witness_energy,
            })
        })
        .collect();
    let first = &amp.runs[0];
    let report = json!({
        "answer": amp.answer.as_str(),
        "t": first.t,
        "beta_prime": first.beta_prime,
        "rounds_used": amp.runs.iter().map(|r| r.rounds_used).sum::<usize>(),
        "runs": run_reports,
        "yes_votes": amp.yes_votes(),
        "witness_alphas": witness,
        "ground_truth": truth,
        "ground_truth_answer": side,
        "agrees": agrees,
    });
    Ok((report, amp.answer, lines))
}

pub fn cmd_verify(inst: &ConsistencyInstance, sigma: &crate::state::DensityMatrix, rounds: Option<usize>, seed: u64) -> Result<Value> {
    let gap = verifier_gap(inst, sigma)?;
    let subset = &inst.layout().subsets()[gap.i];
    let k = inst.layout().locality() as i32;
    let frequencies = match rounds {
        None => Value::Null,
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let freqs = simulate_rounds(inst, sigma, n, &mut rng)?;
            Value::Array(
                freqs
                    .iter()
                    .map(|f| {
                        let sd = (f.probability * (1.0 - f.probability) / f.draws as f64).sqrt();
                        let z = if sd > 0.0 { (f.frequency - f.probability) / sd } else { 0.0 };
                        json!({
                            "i": f.i + 1,
                            "q": f.q.to_string(),
                            "draws": f.draws,
                            "accepts": f.accepts,
                            "frequency": f.frequency,
                            "probability": f.probability,
                            "target": f.target,
                            "z": z,
                        })
                    })
                    .collect(),
            )
        }
    };
    Ok(json!({
        "gap": gap.gap,
        "i": gap.i + 1,
        "subset": subset.iter().map(|q| q + 1).collect::<Vec<_>>(),
        "q": gap.q.to_string(),
        "beta": inst.beta(),
        "soundness_bound": inst.beta() / (2.0 * 4f64.powi(k)),
        "frequencies": frequencies,
    }))
}

/// One bench instance.
#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub promise: Promise,
    pub lambda: f64,
    pub answer: Decision,
    pub rounds_used: usize,
}

impl BenchRecord {
    pub fn correct(&self) -> bool {
        matches!(
            (self.promise, self.answer),
            (Promise::Yes, Decision::Yes) | (Promise::No, Decision::No)
        )
    }
}

#[derive(Clone, Debug)]
pub struct BenchResult {
    pub records: Vec<BenchRecord>,
}

impl BenchResult {
    pub fn correct(&self) -> usize {
        self.records.iter().filter(|r| r.correct()).count()
    }

    pub fn to_value(&self) -> Value {
        let instances: Vec<Value> = self
            .records
            .iter()
            .enumerate()
            .map(|(j, r)| {
                json!({
                    "index": j + 1,
                    "promise": r.promise,
                    "ground_truth": r.lambda,
                    "answer": r.answer.as_str(),
                    "correct": r.correct(),
                    "rounds_used": r.rounds_used,
                })
            })
            .collect();
        let total = self.records.len();
        json!({
            "instances": instances,
            "correct": self.correct(),
            "total": total,
            "accuracy": if total > 0 { self.correct() as f64 / total as f64 } else { 0.0 },
        })
    }
}

/// Instance `j` is YES for even `j`. Its generator and reduction seeds are
/// the `j`-th draw of a generator seeded with `seed`. `progress` receives the
/// wall time of each instance.
pub fn run_bench(
    args: &BenchArgs,
    cfg: &ReductionConfig,
    runs: usize,
    seed: u64,
    progress: &mut dyn FnMut(usize, f64),
) -> Result<BenchResult> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..args.count).map(|_| master.random()).collect();
    let mut records = Vec::with_capacity(args.count);
    for (j, &s) in seeds.iter().enumerate() {
        let start = Instant::now();
        let promise = if j % 2 == 0 { Promise::Yes } else { Promise::No };
        let lh = random_lh(&mut ChaCha8Rng::seed_from_u64(s), args.n, args.m, args.k, args.gap, promise)?;
        let lambda = min_eigenvalue(&lh)?;
        let amp = amplified(&lh, cfg, runs, s)?;
        records.push(BenchRecord {
            promise,
            lambda,
            answer: amp.answer,
            rounds_used: amp.runs.iter().map(|r| r.rounds_used).sum(),
        });
        progress(j, start.elapsed().as_secs_f64());
    }
    Ok(BenchResult { records })
}

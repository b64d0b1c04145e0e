//! Command-line front end. All reports are JSON unless `--output text` is given.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analyze::{
    check_concavity, check_e2, decide, falsify, Channel, ConcavityConfig, Counterexample, DecideConfig,
    FalsifyConfig, Status, Verdict,
};
use crate::certify::{build_certificate, Certificate, CertificateOutcome, CertifyConfig};
use crate::error::Error;
use crate::funcspace::{GeneratorFn, GeneratorSpec};
use crate::means::{weighted_qam, WeightVector};
use crate::problems::{continuity_precheck, InequalityProblem, ProblemSpec};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_INPUT: i32 = 64;
/// Solver failure or conflicting evidence.
pub const EXIT_INTERNAL: i32 = 70;

/// Largest tolerance accepted on the command line.
const MAX_TOLERANCE: f64 = 1e-3;
/// Fresh points per certificate entry when a certificate is replayed.
const REPORT_SAMPLE: usize = 2000;
/// Fresh-sample residual accepted when a certificate is replayed.
const REPORT_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "qamean", version, about = "Quasi-arithmetic means and the inequalities between them")]
pub struct Cli {
    /// Seed for every randomized procedure.
    #[arg(long, global = true, env = "QAMEAN_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weighted quasi-arithmetic mean of a list of points.
    Eval {
        /// Generator JSON file.
        #[arg(long = "f")]
        generator: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        x: Vec<f64>,
        /// Weights; equal weights when omitted.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
    },
    /// Run every decision procedure and print the verdict.
    Check {
        problem: PathBuf,
        #[command(flatten)]
        budgets: Budgets,
        /// Skip the supporting-hyperplane certificate.
        #[arg(long)]
        no_certificate: bool,
    },
    /// Build a supporting-hyperplane certificate.
    Certify {
        problem: PathBuf,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Search for a counterexample.
    Falsify {
        problem: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Replay a stored report against its problem.
    Report { problem: PathBuf, evidence: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct Budgets {
    /// Falsifier objective evaluations.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    /// Certificate grid points per coordinate.
    #[arg(long, default_value_t = 5)]
    pub grid: usize,
    /// Random rows per certificate refinement round.
    #[arg(long, default_value_t = 300)]
    pub sample: usize,
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    /// Midpoint pairs for the concavity test.
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
    /// Hessian grid points per coordinate.
    #[arg(long, default_value_t = 5)]
    pub hessian_grid: usize,
    #[arg(long, default_value_t = 10_000)]
    pub e2_samples: usize,
    /// Residual accepted by certificate refinement.
    #[arg(long, default_value_t = 1e-9)]
    pub residual_tol: f64,
}

impl Budgets {
    fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("trials", self.trials),
            ("grid", self.grid),
            ("sample", self.sample),
            ("rounds", self.rounds),
            ("pairs", self.pairs),
            ("hessian-grid", self.hessian_grid),
            ("e2-samples", self.e2_samples),
        ] {
            if v == 0 {
                return Err(format!("--{name} must be positive"));
            }
        }
        if !(self.residual_tol > 0.0 && self.residual_tol <= MAX_TOLERANCE) {
            return Err(format!("--residual-tol must lie in (0, {MAX_TOLERANCE}]"));
        }
        Ok(())
    }

    fn certify(&self, seed: u64) -> CertifyConfig {
        CertifyConfig {
            grid: self.grid,
            sample: self.sample,
            max_rounds: self.rounds,
            residual_tol: self.residual_tol,
            seed,
        }
    }

    fn decide(&self, seed: u64, skip_certificate: bool) -> DecideConfig {
        DecideConfig {
            falsify: FalsifyConfig {
                trials: self.trials,
                seed,
            },
            certify: self.certify(seed),
            concavity: ConcavityConfig {
                pairs: self.pairs,
                hessian_grid: self.hessian_grid,
                seed,
            },
            e2_samples: self.e2_samples,
            skip_certificate,
        }
    }
}

/// Failure of a command, with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) | Error::Inconsistency(_) => EXIT_INTERNAL,
            Error::Unsupported(_) | Error::Precondition(_) => EXIT_UNDECIDED,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message,
    }
}

/// A finished command: the JSON report, its text rendering, and the exit code.
struct Outcome {
    report: Value,
    text: String,
    code: i32,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_HOLDS };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let body = match cli.output {
                OutputFormat::Json => serde_json::to_string_pretty(&o.report).expect("reports serialize") + "\n",
                OutputFormat::Text => o.text,
            };
            let _ = out.write_all(body.as_bytes());
            o.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Eval { generator, x, lambda } => eval(generator, x, lambda.as_deref()),
        Command::Check {
            problem,
            budgets,
            no_certificate,
        } => {
            budgets.validate().map_err(input_error)?;
            let p = load_problem(problem)?;
            let verdict = decide(&p, &budgets.decide(cli.seed, *no_certificate))?;
            Ok(verdict_outcome(&verdict))
        }
        Command::Certify { problem, budgets } => {
            budgets.validate().map_err(input_error)?;
            let p = load_problem(problem)?;
            certify(&p, &budgets.certify(cli.seed))
        }
        Command::Falsify { problem, trials } => {
            if *trials == 0 {
                return Err(input_error("--trials must be positive".into()));
            }
            let p = load_problem(problem)?;
            let cfg = FalsifyConfig {
                trials: *trials,
                seed: cli.seed,
            };
            let found = falsify(&p, &cfg, Some(continuity_precheck(&p)))?;
            Ok(falsify_outcome(found, *trials))
        }
        Command::Report { problem, evidence } => {
            let p = load_problem(problem)?;
            let ev: Value = load_json(evidence)?;
            report(&p, &ev, cli.seed)
        }
    }
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        input_error(format!(
            "{}:{}:{}: at `{}`: {}",
            path.display(),
            inner.line(),
            inner.column(),
            e.path(),
            inner
        ))
    })?;
    de.end().map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(value)
}

fn load_problem(path: &Path) -> Result<InequalityProblem, Failure> {
    let spec: ProblemSpec = load_json(path)?;
    InequalityProblem::from_spec(&spec).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn eval(path: &Path, x: &[f64], lambda: Option<&[f64]>) -> Result<Outcome, Failure> {
    let spec: GeneratorSpec = load_json(path)?;
    let f = GeneratorFn::new(&spec).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let weights = match lambda {
        Some(l) => WeightVector::new(l.to_vec())?,
        None => WeightVector::uniform(x.len().max(1)),
    };
    let mean = weighted_qam(&f, x, &weights)?;
    Ok(Outcome {
        report: json!({ "mean": mean }),
        text: format!("{mean}\n"),
        code: EXIT_HOLDS,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn channel_text(c: &Channel) -> String {
    match c {
        Channel::Holds => "holds".into(),
        Channel::Fails { violation } => format!("fails (violation {violation:e})"),
        Channel::Undecided { reason } => format!("undecided: {reason}"),
        Channel::Skipped { reason } => format!("skipped: {reason}"),
    }
}

fn counterexample_text(c: &Counterexample) -> String {
    let mut s = String::new();
    for (x, l) in c.points.iter().zip(c.lambda.as_slice()) {
        let _ = writeln!(s, "  point {x:?} weight {l}");
    }
    let _ = writeln!(s, "  lhs {} rhs {} violation {}", c.lhs, c.rhs, c.violation);
    s
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::HoldsCertified => "holds_certified",
        Status::Fails => "fails",
        Status::Undecided => "undecided",
    }
}

fn verdict_outcome(v: &Verdict) -> Outcome {
    let code = match v.status {
        Status::HoldsCertified => EXIT_HOLDS,
        Status::Fails => EXIT_FAILS,
        Status::Undecided => EXIT_UNDECIDED,
    };
    let a = &v.agreement;
    let mut text = format!("status: {}\n", status_name(v.status));
    for (name, c) in [
        ("concavity", &a.concavity),
        ("e2", &a.e2),
        ("certificate", &a.certificate),
        ("falsifier", &a.falsifier),
    ] {
        let _ = writeln!(text, "{name}: {}", channel_text(c));
    }
    if let Some(c) = &v.counterexample {
        text.push_str("counterexample:\n");
        text.push_str(&counterexample_text(c));
    }
    Outcome {
        report: to_value(v),
        text,
        code,
    }
}

fn certify(p: &InequalityProblem, cfg: &CertifyConfig) -> Result<Outcome, Failure> {
    let outcome = match build_certificate(p, cfg) {
        Ok(o) => o,
        Err(Error::Precondition(reason)) => {
            return Ok(Outcome {
                text: format!("status: undecided\nreason: {reason}\n"),
                report: json!({ "status": "undecided", "reason": reason }),
                code: EXIT_UNDECIDED,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let (code, text) = match &outcome {
        CertificateOutcome::Certified { certificate } => (
            EXIT_HOLDS,
            format!(
                "status: certified\nentries: {}\nresidual: {:e}\n",
                certificate.len(),
                certificate.residual
            ),
        ),
        CertificateOutcome::Refuted { counterexample } => (
            EXIT_FAILS,
            format!("status: refuted\n{}", counterexample_text(counterexample)),
        ),
        CertificateOutcome::Undecided {
            unresolved, reason, ..
        } => (
            EXIT_UNDECIDED,
            format!("status: undecided\nunresolved base points: {}\nreason: {reason}\n", unresolved.len()),
        ),
    };
    Ok(Outcome {
        report: to_value(&outcome),
        text,
        code,
    })
}

fn falsify_outcome(found: Option<Counterexample>, trials: usize) -> Outcome {
    match found {
        Some(c) => Outcome {
            text: format!("status: found\n{}", counterexample_text(&c)),
            report: json!({ "status": "found", "counterexample": c }),
            code: EXIT_FAILS,
        },
        None => Outcome {
            text: format!("status: none\ntrials: {trials}\n"),
            report: json!({ "status": "none", "trials": trials }),
            code: EXIT_UNDECIDED,
        },
    }
}

fn field<T: DeserializeOwned>(ev: &Value, name: &str) -> Result<T, Failure> {
    let v = ev
        .get(name)
        .ok_or_else(|| input_error(format!("evidence has no `{name}` field")))?;
    serde_path_to_error::deserialize(v.clone())
        .map_err(|e| input_error(format!("evidence field `{name}` at `{}`: {}", e.path(), e.inner())))
}

fn replay_counterexample(p: &InequalityProblem, ev: &Value) -> Result<Value, Failure> {
    let c: Counterexample = field(ev, "counterexample")?;
    let v = c.replay(p)?;
    if !c.is_significant() {
        return Err(Error::Inconsistency(format!("stored violation {v:e} is below the reporting threshold")).into());
    }
    Ok(json!({ "violation": v }))
}

fn replay_certificate(p: &InequalityProblem, ev: &Value, seed: u64) -> Result<Value, Failure> {
    let c: Certificate = field(ev, "certificate")?;
    c.validate(p)?;
    let residual = c.verify(p, REPORT_SAMPLE, seed)?;
    if residual > REPORT_RESIDUAL_TOL {
        return Err(Error::Inconsistency(format!("certificate residual {residual:e} on a fresh sample")).into());
    }
    Ok(json!({ "entries": c.len(), "fresh_residual": residual }))
}

fn replay_concavity(p: &InequalityProblem, seed: u64) -> Result<Value, Failure> {
    let cfg = ConcavityConfig {
        seed,
        ..ConcavityConfig::default()
    };
    let c = check_concavity(p, &cfg)?;
    let e2 = check_e2(p, 10_000, seed)?;
    if !c.is_concave() || !e2.holds() {
        return Err(Error::Inconsistency("the concavity evidence does not reproduce".into()).into());
    }
    Ok(json!({ "concavity": c }))
}

/// Re-validates stored evidence; the report repeats the stored status.
fn report(p: &InequalityProblem, ev: &Value, seed: u64) -> Result<Outcome, Failure> {
    let status: String = field(ev, "status")?;
    let (code, replayed) = match status.as_str() {
        "fails" | "refuted" | "found" => (EXIT_FAILS, replay_counterexample(p, ev)?),
        "certified" => (EXIT_HOLDS, replay_certificate(p, ev, seed)?),
        "holds_certified" => {
            let via_certificate = ev
                .pointer("/agreement/certificate/status")
                .and_then(Value::as_str)
                .is_some_and(|s| s == "holds");
            let r = if via_certificate {
                replay_certificate(p, ev, seed)?
            } else {
                replay_concavity(p, seed)?
            };
            (EXIT_HOLDS, r)
        }
        "undecided" | "none" => {
            if ev.get("counterexample").is_some_and(|c| !c.is_null()) {
                return Err(input_error("undecided evidence carries a counterexample".into()));
            }
            (EXIT_UNDECIDED, Value::Null)
        }
        other => return Err(input_error(format!("unknown evidence status `{other}`"))),
    };
    let mut text = format!("status: {status}\n");
    if !replayed.is_null() {
        let _ = writeln!(text, "replayed: {replayed}");
    }
    Ok(Outcome {
        report: json!({ "status": status, "replayed": replayed }),
        text,
        code,
    })
}

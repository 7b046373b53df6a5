//! Command-line front end. Every command prints one JSON document on
//! stdout; diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 malformed input, 2 unsolvable, 3 verification
//! failure. Output and column indices on the command line are 1-based.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::{Complex, Complex64};
use serde_json::{json, Value};

use crate::error::{Error, FailedSubset, Result};
use crate::geometry::{characteristic_polynomial, structural_report, InvariantZero, Mode};
use crate::io::{parse_list, parse_system, FeedbackFile};
use crate::poly::Root;
use crate::runtime::{self, Grid, MonotoneFailure, DEFAULT_SAMPLES};
use crate::scalar::{Rational, Scalar};
use crate::synthesis::{
    check_structural, column_kind, synthesize_with_report, verify_eigenstructure, ColumnLabel,
    ColumnStrategy, ModeSelection, OutputBehaviour, SolvabilityReport, SynthesisResult,
};
use crate::system::LtiSystem;

#[derive(Debug, Parser)]
#[command(name = "monotrack", version, about = "Monotonic step-tracking feedback design")]
pub struct Cli {
    /// Compute in double precision instead of exact rationals.
    #[arg(long, global = true)]
    pub float: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural report and structural solvability verdict.
    Analyze(AnalyzeArgs),
    /// Build a feedback matrix for the given visible modes.
    Synthesize(SynthesizeArgs),
    /// Simulate one closed-loop run and write a CSV trace.
    Simulate(SimulateArgs),
    /// Check monotonicity over seeded random initial conditions.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub system: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    pub system: PathBuf,
    /// Visible modes, one per output: `-1,-1,-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub modes: String,
    /// Free invisible modes for the R* part.
    #[arg(long, allow_hyphen_values = true)]
    pub invisible: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outputs whose visible columns must be kept.
    #[arg(long, conflicts_with = "columns")]
    pub force_visible: Option<String>,
    /// Explicit retained candidate columns.
    #[arg(long)]
    pub columns: Option<String>,
    /// Upper bound on the visible modes.
    #[arg(long, allow_hyphen_values = true)]
    pub rate: Option<String>,
    /// Also write the result to this feedback file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub system: PathBuf,
    #[arg(long)]
    pub feedback: PathBuf,
    /// Step reference, one entry per output.
    #[arg(long, allow_hyphen_values = true)]
    pub reference: String,
    /// Initial plant state (default: zero).
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Envelope rate; defaults to the slowest visible mode in the feedback file.
    #[arg(long, allow_hyphen_values = true)]
    pub mode_bound: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub system: PathBuf,
    #[arg(long)]
    pub feedback: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step reference (default: zero; it only shifts the equilibrium).
    #[arg(long, allow_hyphen_values = true)]
    pub reference: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mode_bound: Option<f64>,
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Malformed = 1,
    Unsolvable = 2,
    VerificationFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of(err: &Error) -> Self {
        match err {
            Error::Unsolvable { .. } => ExitStatus::Unsolvable,
            Error::Verification(_) | Error::NotStabilizing | Error::RetriesExhausted(_) => {
                ExitStatus::VerificationFailed
            }
            _ => ExitStatus::Malformed,
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() {
                ExitStatus::Malformed
            } else {
                let _ = write!(stdout, "{e}");
                ExitStatus::Success
            };
        }
    };
    let outcome = if cli.float {
        execute::<f64>(&cli)
    } else {
        match execute::<Rational>(&cli) {
            Err(Error::InexactZero(z)) => {
                let _ = writeln!(
                    stderr,
                    "note: minimum-phase zero {z} has no exact rational value; rerunning in double precision"
                );
                execute::<f64>(&cli)
            }
            other => other,
        }
    };
    match outcome {
        Ok((doc, status)) => {
            let _ = writeln!(stdout, "{}", pretty(&doc));
            status
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let Error::Unsolvable {
                reason,
                failed_subsets,
            } = &e
            {
                let doc = json!({
                    "solvable": false,
                    "reason": reason,
                    "failed_subsets": subsets_json(failed_subsets),
                });
                let _ = writeln!(stdout, "{}", pretty(&doc));
            }
            ExitStatus::of(&e)
        }
    }
}

fn pretty(doc: &Value) -> String {
    serde_json::to_string_pretty(doc).unwrap_or_else(|_| doc.to_string())
}

type Outcome = Result<(Value, ExitStatus)>;

fn execute<S: Scalar>(cli: &Cli) -> Outcome {
    let scalar = if S::EXACT { "rational" } else { "f64" };
    let (mut doc, status) = match &cli.command {
        Command::Analyze(args) => analyze::<S>(args)?,
        Command::Synthesize(args) => synthesize::<S>(args)?,
        Command::Simulate(args) => simulate::<S>(args)?,
        Command::Check(args) => check::<S>(args)?,
    };
    if let Value::Object(map) = &mut doc {
        map.insert("scalar".into(), json!(scalar));
    }
    Ok((doc, status))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_system<S: Scalar>(path: &Path) -> Result<LtiSystem<S>> {
    parse_system(&read(path)?)
}

fn one_based(text: &str, what: &str, limit: usize) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            let k: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("{what}: invalid index {:?}", t.trim())))?;
            if k == 0 || k > limit {
                return Err(Error::Input(format!("{what}: index {k} outside 1..={limit}")));
            }
            Ok(k - 1)
        })
        .collect()
}

fn complex_json<S: Scalar>(approx: Complex64, exact: Option<&Complex<S>>) -> Value {
    match exact {
        Some(z) if z.im.is_zero() => z.re.to_json(),
        Some(z) => json!({ "re": z.re.to_json(), "im": z.im.to_json() }),
        None if approx.im == 0.0 => json!(approx.re),
        None => json!({ "re": approx.re, "im": approx.im }),
    }
}

fn roots_json<S: Scalar>(roots: &[Root<S>]) -> Value {
    Value::Array(
        roots
            .iter()
            .map(|r| {
                json!({
                    "value": complex_json(r.approx, r.exact.as_ref()),
                    "multiplicity": r.multiplicity,
                })
            })
            .collect(),
    )
}

fn zero_json<S: Scalar>(z: &InvariantZero<S>) -> Value {
    json!({
        "value": complex_json(z.approx, z.exact.as_ref()),
        "geometric_multiplicity": z.geometric_multiplicity,
        "algebraic_multiplicity": z.algebraic_multiplicity,
        "minimum_phase": z.minimum_phase,
    })
}

fn mode_json<S: Scalar>(mode: &Mode<S>) -> Value {
    match mode {
        Mode::Real(v) => v.to_json(),
        Mode::Pair { re, im } => json!({ "re": re.to_json(), "im": im.to_json() }),
    }
}

fn subsets_json(subsets: &[FailedSubset]) -> Value {
    Value::Array(
        subsets
            .iter()
            .map(|f| {
                json!({
                    "outputs": f.outputs.iter().map(|j| j + 1).collect::<Vec<_>>(),
                    "achieved": f.achieved,
                    "required": f.required,
                })
            })
            .collect(),
    )
}

fn solvability_json(report: &SolvabilityReport) -> Value {
    json!({
        "solvable": report.solvable,
        "reason": report.reason(),
        "h": report.h,
        "n_minus_p": report.baseline,
        "failed_subsets": subsets_json(&report.failed_subsets),
    })
}

fn analyze<S: Scalar>(args: &AnalyzeArgs) -> Outcome {
    let sys = load_system::<S>(&args.system)?;
    let report = structural_report(&sys, args.seed)?;
    let structural = match check_structural(&sys, &report) {
        Ok(s) => solvability_json(&s),
        Err(e @ Error::InexactZero(_)) => return Err(e),
        Err(e) => json!({ "solvable": false, "reason": e.to_string() }),
    };
    let doc = json!({
        "domain": sys.domain().name(),
        "n": report.n,
        "m": report.m,
        "p": report.p,
        "normal_rank": report.normal_rank,
        "right_invertible": report.right_invertible,
        "stabilizable": report.stabilizable,
        "uncontrollable_modes": roots_json(&report.uncontrollable_modes),
        "zeros": report.zeros.iter().map(zero_json).collect::<Vec<_>>(),
        "assumption1": report.assumption1,
        "assumption2": report.assumption2,
        "r": report.r(),
        "h": report.h(),
        "seed": args.seed,
        "structural": structural,
    });
    Ok((doc, ExitStatus::Success))
}

fn per_output_json<S: Scalar>(result: &SynthesisResult<S>) -> Value {
    Value::Array(
        result
            .per_output
            .iter()
            .enumerate()
            .map(|(j, o)| match o {
                OutputBehaviour::Visible { mode, beta } => json!({
                    "output": j + 1,
                    "mode": mode.to_json(),
                    "beta": beta.to_json(),
                }),
                OutputBehaviour::Instantaneous => json!({ "output": j + 1, "mode": Value::Null }),
            })
            .collect(),
    )
}

fn labels_json<S: Scalar>(labels: &[ColumnLabel<S>]) -> Value {
    Value::Array(
        labels
            .iter()
            .map(|label| match label {
                ColumnLabel::Invariant(c) => json!({
                    "kind": column_kind(label),
                    "mode": mode_json(&c.mode),
                }),
                ColumnLabel::Visible { output, lambda, .. } => json!({
                    "kind": column_kind(label),
                    "output": output + 1,
                    "mode": lambda.to_json(),
                }),
            })
            .collect(),
    )
}

fn synthesize<S: Scalar>(args: &SynthesizeArgs) -> Outcome {
    let sys = load_system::<S>(&args.system)?;
    let visible = parse_list::<S>(&args.modes, "--modes")?;
    let mut modes = ModeSelection::new(visible);
    if let Some(text) = &args.invisible {
        modes = modes.with_invisible(parse_list(text, "--invisible")?);
    }
    if let Some(text) = &args.rate {
        let rate = parse_list::<S>(text, "--rate")?;
        let [rate] = <[S; 1]>::try_from(rate)
            .map_err(|_| Error::Input("--rate takes a single value".into()))?;
        modes = modes.with_rate(rate);
    }
    let strategy = match (&args.force_visible, &args.columns) {
        (Some(text), _) => ColumnStrategy::ForceVisible(one_based(text, "--force-visible", sys.p())?),
        (None, Some(text)) => ColumnStrategy::Explicit(one_based(text, "--columns", usize::MAX)?),
        (None, None) => ColumnStrategy::PreferInvariant,
    };
    let report = structural_report(&sys, args.seed)?;
    let result = synthesize_with_report(&sys, &report, &modes, &strategy, args.seed)?;
    let verification = verify_eigenstructure(&sys, &result);
    let (acl, _) = sys.closed_loop_matrices(&result.f);
    let spectrum = characteristic_polynomial(&acl).roots();
    let feedback_modes = json!({
        "visible": modes.visible.iter().map(Scalar::to_json).collect::<Vec<_>>(),
        "per_output": per_output_json(&result),
        "columns": labels_json(&result.labels),
    });
    let feedback = FeedbackFile {
        f: result.f.clone(),
        modes: feedback_modes,
        seed: args.seed,
    };
    let mut doc = feedback.to_json();
    if let Some(path) = &args.out {
        fs::write(path, format!("{}\n", pretty(&doc)))?;
    }
    let extra = json!({
        "spectrum": roots_json(&spectrum),
        "psi": result.psi.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "verification": {
            "passed": verification.passed(),
            "summary": verification.summary(),
        },
    });
    if let (Value::Object(map), Value::Object(more)) = (&mut doc, extra) {
        map.extend(more);
    }
    let status = if verification.passed() {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    };
    Ok((doc, status))
}

/// Slowest visible mode recorded in a feedback file.
fn recorded_bound<S: Scalar>(feedback: &FeedbackFile<S>) -> Option<f64> {
    feedback
        .output_modes()?
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.max(m))))
}

fn load_feedback<S: Scalar>(path: &Path) -> Result<FeedbackFile<S>> {
    FeedbackFile::parse(&read(path)?)
}

fn verdicts_json(report: &runtime::MonotonicityReport) -> Value {
    Value::Array(
        report
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                json!({
                    "output": k + 1,
                    "verdict": c.verdict.label(),
                    "gamma": c.fit.gamma,
                    "mode": c.fit.mode,
                    "fit_residual": c.fit.residual,
                })
            })
            .collect(),
    )
}

fn failure_json(f: &MonotoneFailure) -> Value {
    match f {
        MonotoneFailure::NotMonotone { sample } => json!({ "kind": "not_monotone", "sample": sample }),
        MonotoneFailure::EnvelopeExceeded { sample } => {
            json!({ "kind": "envelope_exceeded", "sample": sample })
        }
    }
}

fn simulate<S: Scalar>(args: &SimulateArgs) -> Outcome {
    let sys = load_system::<S>(&args.system)?;
    let feedback = load_feedback::<S>(&args.feedback)?;
    let reference = parse_list::<S>(&args.reference, "--reference")?;
    let x0 = match &args.x0 {
        Some(text) => parse_list::<S>(text, "--x0")?,
        None => vec![S::zero(); sys.n()],
    };
    let cl = runtime::closed_loop(&sys, &feedback.f, &reference)?;
    let default = cl.default_grid();
    let grid = match (args.horizon, args.dt) {
        (None, None) => default,
        (Some(horizon), None) => Grid {
            horizon,
            dt: horizon / DEFAULT_SAMPLES as f64,
        },
        (None, Some(dt)) => Grid { dt, ..default },
        (Some(horizon), Some(dt)) => Grid { horizon, dt },
    };
    let trace = runtime::simulate(&cl, &x0, Some(grid))?;
    let file = fs::File::create(&args.out)?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    let bound = args.mode_bound.or_else(|| recorded_bound(&feedback));
    let report = runtime::check_monotone(&trace, bound);
    let doc = json!({
        "samples": trace.times.len(),
        "horizon": grid.horizon,
        "dt": grid.dt,
        "mode_bound": bound,
        "passed": report.passed(),
        "components": verdicts_json(&report),
        "trace": args.out.display().to_string(),
    });
    let status = if report.passed() {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    };
    Ok((doc, status))
}

/// Failures listed in the `check` summary.
const LISTED_FAILURES: usize = 20;

fn check<S: Scalar>(args: &CheckArgs) -> Outcome {
    let sys = load_system::<S>(&args.system)?;
    let feedback = load_feedback::<S>(&args.feedback)?;
    let reference = match &args.reference {
        Some(text) => parse_list::<S>(text, "--reference")?,
        None => vec![S::zero(); sys.p()],
    };
    let cl = runtime::closed_loop(&sys, &feedback.f, &reference)?;
    let bound = args.mode_bound.or_else(|| recorded_bound(&feedback));
    let batch = runtime::check_batch(&cl, args.trials, args.seed, None, bound)?;
    let components: Vec<Value> = batch
        .components
        .iter()
        .enumerate()
        .map(|(k, c)| {
            json!({
                "output": k + 1,
                "verdict": if c.failed == 0 { "PASS" } else { "FAIL" },
                "passed": c.passed,
                "instantaneous": c.instantaneous,
                "failed": c.failed,
                "worst_fit_residual": c.worst_residual,
            })
        })
        .collect();
    let failures: Vec<Value> = batch
        .failures
        .iter()
        .take(LISTED_FAILURES)
        .map(|(trial, k, why)| json!({ "trial": trial, "output": k + 1, "failure": failure_json(why) }))
        .collect();
    let doc = json!({
        "trials": batch.trials,
        "seed": batch.seed,
        "mode_bound": bound,
        "passed": batch.passed(),
        "components": components,
        "failures": failures,
    });
    let status = if batch.passed() {
        ExitStatus::Success
    } else {
        ExitStatus::VerificationFailed
    };
    Ok((doc, status))
}

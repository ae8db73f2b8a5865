//! Command-line driver: fit the dyadic and hybrid estimators on sequence
//! files, run the simulation comparison, and emit approximation
//! diagnostics. Exit codes: 0 success, 2 malformed input, 3 calibration
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use catseg::approx::besov_bound_check;
use catseg::calibrate::{calibrate_c0, calibrate_stage2, default_d_max, Stage2Form};
use catseg::hybrid::{fit_hybrid, map_to_full_indices, split_even_odd, HybridConfig, PenaltyForm};
use catseg::sim::{build_distribution, comparison_table, PiecewiseSpec};
use catseg::{fit_preliminary, CategorySequence, Error, Partition};

#[derive(Parser)]
#[command(
    name = "catseg",
    version,
    about = "Change-point detection in categorical sequences by penalized least squares"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the dyadic-selection estimator to a sequence file
    Fit(FitArgs),
    /// Fit the two-stage hybrid estimator to a sequence file
    Hybrid(HybridArgs),
    /// Monte Carlo comparison of the calibrated estimators on a spec
    Simulate(SimulateArgs),
    /// Approximation-bound diagnostics for a spec
    ApproxCheck(ApproxCheckArgs),
}

#[derive(Args)]
struct InputArgs {
    /// File of whitespace-separated labels in 1..=r
    input: PathBuf,

    /// Alphabet size
    #[arg(long)]
    r: usize,

    /// Pad to the next power of two by repeating the last symbol
    #[arg(long)]
    pad: bool,

    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Penalty constant, or `auto` for the dimension-jump calibration
    #[arg(long, default_value = "auto")]
    c0: String,

    /// Dimension cap for calibration, or `auto` for the built-in default
    #[arg(long, default_value = "auto")]
    dmax: String,
}

#[derive(Args)]
struct HybridArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Stage-one penalty constant, or `auto`
    #[arg(long, default_value = "auto")]
    c0: String,

    /// Stage-two penalty: `log:<c1>,<c2>`, `logp[:beta]` or `linear[:beta]`
    /// (calibrated when beta is omitted)
    #[arg(long, default_value = "linear")]
    penalty: String,

    /// Dimension cap, or `auto`
    #[arg(long, default_value = "auto")]
    dmax: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// Distribution spec (JSON)
    #[arg(long)]
    spec: PathBuf,

    /// Number of Monte Carlo replicates
    #[arg(long)]
    reps: usize,

    /// Master seed
    #[arg(long)]
    seed: u64,

    /// Write the CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxCheckArgs {
    /// Distribution spec (JSON)
    #[arg(long)]
    spec: PathBuf,

    /// Smoothness parameter of the checked bound
    #[arg(long)]
    alpha: f64,

    /// Coefficient summability index in (0, 2]
    #[arg(long)]
    p: f64,

    /// Comma-separated segment budgets, e.g. 1,2,4,8
    #[arg(long)]
    dims: String,

    /// Write the CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

enum CliError {
    /// Bad input or arguments: exit 2.
    Input(String),
    /// Penalty calibration could not produce a constant: exit 3.
    Calibration(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CalibrationFailure(msg) => CliError::Calibration(msg),
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Hybrid(args) => cmd_hybrid(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::ApproxCheck(args) => cmd_approx_check(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Calibration(msg)) => {
            eprintln!("calibration error: {msg}");
            ExitCode::from(3)
        }
    }
}

#[derive(Serialize)]
struct SegmentOut {
    start: usize,
    end: usize,
    probs: Vec<f64>,
}

#[derive(Serialize)]
struct FitOutput {
    n: usize,
    r: usize,
    penalty_constant: f64,
    dimension: usize,
    criterion: f64,
    segments: Vec<SegmentOut>,
}

#[derive(Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
enum PenaltyOut {
    Log { c1: f64, c2: f64 },
    Logp { beta: f64 },
    Linear { beta: f64 },
}

#[derive(Serialize)]
struct StageOut {
    dimension: usize,
    breakpoints: Vec<usize>,
}

#[derive(Serialize)]
struct HybridOutput {
    n: usize,
    r: usize,
    c0: f64,
    penalty: PenaltyOut,
    dimension: usize,
    criterion: f64,
    stage1: StageOut,
    segments: Vec<SegmentOut>,
}

fn read_sequence(args: &InputArgs) -> CliResult<CategorySequence> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.input.display())))?;
    let mut values = Vec::new();
    for token in text.split_whitespace() {
        let v: u32 = token
            .parse()
            .map_err(|_| CliError::Input(format!("not a label: {token:?}")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Input("input file contains no labels".into()));
    }
    let n = values.len();
    if !n.is_power_of_two() {
        if args.pad {
            let last = *values.last().unwrap();
            values.resize(n.next_power_of_two(), last);
        } else {
            return Err(CliError::Input(format!(
                "length {n} is not a power of two (use --pad to extend)"
            )));
        }
    }
    Ok(CategorySequence::new(values, args.r)?)
}

fn parse_d_max(raw: &str, n: usize) -> CliResult<usize> {
    if raw == "auto" {
        return Ok(default_d_max(n));
    }
    let d: usize = raw
        .parse()
        .map_err(|_| CliError::Input(format!("invalid --dmax value {raw:?}")))?;
    if d < 1 {
        return Err(CliError::Input("--dmax must be at least 1".into()));
    }
    Ok(d)
}

fn parse_positive(raw: &str, flag: &str) -> CliResult<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| CliError::Input(format!("invalid {flag} value {raw:?}")))?;
    if !(v > 0.0) {
        return Err(CliError::Input(format!("{flag} must be > 0")));
    }
    Ok(v)
}

fn emit(output: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn segments_out(partition: &Partition, probs: &[Vec<f64>]) -> Vec<SegmentOut> {
    partition
        .segments()
        .zip(probs)
        .map(|((start, end), p)| SegmentOut { start, end, probs: p.clone() })
        .collect()
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let seq = read_sequence(&args.input)?;
    let d_max = parse_d_max(&args.dmax, seq.n())?;
    let c0 = if args.c0 == "auto" {
        calibrate_c0(&seq, d_max)?
    } else {
        parse_positive(&args.c0, "--c0")?
    };
    let fit = fit_preliminary(&seq, c0)?;
    let report = FitOutput {
        n: seq.n(),
        r: seq.r(),
        penalty_constant: c0,
        dimension: fit.dimension(),
        criterion: fit.criterion,
        segments: segments_out(&fit.partition, &fit.segment_probs),
    };
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Input(e.to_string()))?;
    json.push('\n');
    emit(&args.input.output, &json)
}

/// Stage-two penalty argument: an explicit form, or a shape whose constant
/// still needs calibration on the odd half.
enum PenaltySpec {
    Explicit(PenaltyForm),
    Calibrate(Stage2Form),
}

fn parse_penalty(raw: &str) -> CliResult<PenaltySpec> {
    let (head, tail) = match raw.split_once(':') {
        Some((h, t)) => (h, Some(t)),
        None => (raw, None),
    };
    match (head, tail) {
        ("log", Some(params)) => {
            let (c1, c2) = params.split_once(',').ok_or_else(|| {
                CliError::Input("expected --penalty log:<c1>,<c2>".into())
            })?;
            Ok(PenaltySpec::Explicit(PenaltyForm::Log {
                c1: parse_positive(c1, "--penalty log c1")?,
                c2: parse_positive(c2, "--penalty log c2")?,
            }))
        }
        ("log", None) => Err(CliError::Input("expected --penalty log:<c1>,<c2>".into())),
        ("logp", None) => Ok(PenaltySpec::Calibrate(Stage2Form::LogPractical)),
        ("logp", Some(beta)) => Ok(PenaltySpec::Explicit(PenaltyForm::LogPractical {
            beta: parse_positive(beta, "--penalty logp beta")?,
        })),
        ("linear", None) => Ok(PenaltySpec::Calibrate(Stage2Form::Linear)),
        ("linear", Some(beta)) => Ok(PenaltySpec::Explicit(PenaltyForm::Linear {
            beta: parse_positive(beta, "--penalty linear beta")?,
        })),
        _ => Err(CliError::Input(format!(
            "unknown penalty {raw:?}: expected log:<c1>,<c2>, logp[:beta] or linear[:beta]"
        ))),
    }
}

fn cmd_hybrid(args: HybridArgs) -> CliResult<()> {
    let seq = read_sequence(&args.input)?;
    if seq.n() < 2 {
        return Err(CliError::Input("hybrid fit needs at least two observations".into()));
    }
    let d_max = parse_d_max(&args.dmax, seq.n())?;
    let (even, odd) = split_even_odd(&seq)?;
    let c0 = if args.c0 == "auto" {
        calibrate_c0(&even, d_max)?
    } else {
        parse_positive(&args.c0, "--c0")?
    };
    let penalty = match parse_penalty(&args.penalty)? {
        PenaltySpec::Explicit(form) => form,
        PenaltySpec::Calibrate(shape) => {
            let stage1 = fit_preliminary(&even, c0)?;
            let beta = calibrate_stage2(&odd, &stage1.partition, shape, d_max)?;
            // A one-segment stage keeps the conventional constant 0; the
            // fit never evaluates it, but the config wants something
            // positive.
            let beta = if beta > 0.0 { beta } else { 1.0 };
            match shape {
                Stage2Form::LogPractical => PenaltyForm::LogPractical { beta },
                Stage2Form::Linear => PenaltyForm::Linear { beta },
            }
        }
    };
    let cfg = HybridConfig { c0, penalty, d_max };
    let result = fit_hybrid(&seq, &cfg)?;
    let full_scale = map_to_full_indices(&result.stage2_partition);
    let stage1_full = map_to_full_indices(&result.stage1.partition);
    let report = HybridOutput {
        n: seq.n(),
        r: seq.r(),
        c0,
        penalty: match penalty {
            PenaltyForm::Log { c1, c2 } => PenaltyOut::Log { c1, c2 },
            PenaltyForm::LogPractical { beta } => PenaltyOut::Logp { beta },
            PenaltyForm::Linear { beta } => PenaltyOut::Linear { beta },
        },
        dimension: result.stage2_partition.dimension(),
        criterion: result.stage2_criterion,
        stage1: StageOut {
            dimension: result.stage1.dimension(),
            breakpoints: stage1_full.breakpoints().to_vec(),
        },
        segments: segments_out(&full_scale, &result.segment_probs),
    };
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Input(e.to_string()))?;
    json.push('\n');
    emit(&args.input.output, &json)
}

fn read_spec(path: &Path) -> CliResult<PiecewiseSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(PiecewiseSpec::from_json(&text)?)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let spec = read_spec(&args.spec)?;
    let table = comparison_table(&spec, args.reps, args.seed)?;
    emit(&args.output, &table.to_csv())
}

fn cmd_approx_check(args: ApproxCheckArgs) -> CliResult<()> {
    let spec = read_spec(&args.spec)?;
    let s = build_distribution(&spec)?;
    let mut dims = Vec::new();
    for token in args.dims.split(',') {
        let d: usize = token
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("invalid dimension {token:?}")))?;
        dims.push(d);
    }
    let report = besov_bound_check(&s, args.alpha, args.p, &dims)?;
    let mut csv = String::from("dim,e_d,ratio,slope,max_ratio,pass\n");
    let slope = report
        .slope
        .map(|s| s.to_string())
        .unwrap_or_else(|| "NA".into());
    for entry in &report.entries {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            entry.dimension, entry.e_d, entry.ratio, slope, report.max_ratio, report.pass
        ));
    }
    emit(&args.output, &csv)
}

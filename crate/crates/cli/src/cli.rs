//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};
use crate::run::{execute, RunOptions};
use crate::spec::{parse_seeds, resolve, ExperimentSpec, Kind};
use crate::verify::{run_verify, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "disteval", version, about = "Distributional policy evaluation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distributional dynamic programming to a fixed tolerance.
    Dp(RunArgs),
    /// Categorical fixed point by a direct linear solve.
    Dcfp(RunArgs),
    /// Categorical TD.
    Ctd(RunArgs),
    /// Nonparametric (particle) TD.
    Ntd(RunArgs),
    /// Markovian TD with burn-in and data-drop.
    Datadrop(RunArgs),
    /// Variance-reduced epochs.
    Vr(RunArgs),
    /// Empirical violation rates of the martingale tail bounds.
    Freedman(RunArgs),
    /// Final error across several update counts.
    Sweep(RunArgs),
    /// Fast invariant checks against independent oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment spec, or a manifest from an earlier run.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Output directory [default: spec `out`, else disteval-out/<kind>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seeds as `0..32` or `1,2,5`; replaces the spec's list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write plot.svg.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory for verify.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Divide deterministic tolerances by this factor.
    #[arg(long, default_value_t = 1.0)]
    pub tighten: f64,
}

fn run_experiment(kind: Kind, args: RunArgs) -> CliResult<()> {
    let (mut spec, origin) = match &args.spec {
        Some(path) => (ExperimentSpec::load(path)?, path.display().to_string()),
        None => (ExperimentSpec::new(kind), "<defaults>".to_string()),
    };
    if spec.kind != kind {
        return Err(CliError::spec(&origin, format!("spec kind is {}, command is {}", spec.kind.name(), kind.name())));
    }
    if let Some(s) = &args.seeds {
        spec.seeds = Some(parse_seeds(s)?);
    }
    let out = args
        .out
        .clone()
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from("disteval-out").join(kind.name()));
    let resolved = resolve(&spec, &origin)?;
    let artifacts = execute(&resolved, &RunOptions { out, workers: args.workers, plot: args.plot })?;
    println!("{}: wrote {} files to {}", kind.name(), artifacts.files.len(), artifacts.dir.display());
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Dp(a) => run_experiment(Kind::Dp, a),
        Command::Dcfp(a) => run_experiment(Kind::Dcfp, a),
        Command::Ctd(a) => run_experiment(Kind::Ctd, a),
        Command::Ntd(a) => run_experiment(Kind::Ntd, a),
        Command::Datadrop(a) => run_experiment(Kind::Datadrop, a),
        Command::Vr(a) => run_experiment(Kind::Vr, a),
        Command::Freedman(a) => run_experiment(Kind::Freedman, a),
        Command::Sweep(a) => run_experiment(Kind::Sweep, a),
        Command::Verify(a) => {
            if !(a.tighten >= 1.0) {
                Err(CliError::spec("--tighten", "must be at least 1"))
            } else {
                run_verify(&VerifyOptions { out: a.out, workers: a.workers, tighten: a.tighten })
            }
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `sjq`: decomposition, SJ checks, state evaluation and the diagnostic
//! suite from the command line.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2
//! when the input or configuration is unusable.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sjq_core::causet::DEFAULT_COUPLING;
use sjq_core::cfield::HbarGrid;

use crate::commands::Outcome;
use crate::config::{Format, InputKind, RunConfig, SourceSpec};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "sjq", version, about = "SJ states, Kähler structure and Berezin-Toeplitz diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Matrix (CSV or JSON) or causal-set (JSON or edge list) file.
    #[arg(long, global = true, conflicts_with = "sprinkle")]
    input: Option<PathBuf>,
    /// How to read --input.
    #[arg(long, global = true, value_enum, default_value_t = InputKind::Auto)]
    input_kind: InputKind,
    /// Sprinkle the unit 2D causal diamond at this density instead of reading a file.
    #[arg(long, global = true, value_name = "DENSITY")]
    sprinkle: Option<f64>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Fock cutoff per mode.
    #[arg(long, global = true, default_value_t = 40)]
    cutoff: usize,
    /// `top:2^-k` for a halving grid, or a comma list; 0 is always appended.
    #[arg(long, global = true, default_value = "1:2^-16")]
    hbar_grid: String,
    /// Replace every residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Coupling of the discrete retarded Green function.
    #[arg(long, global = true, default_value_t = DEFAULT_COUPLING)]
    coupling: f64,
    /// Write the report into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Polar decomposition: mode scales, vacuum energies and residuals.
    Decompose,
    /// SJ axioms, uniqueness and purity of the closed-form two-point operator.
    SjCheck {
        /// Add ε·1 to the SJ operator before checking.
        #[arg(long, default_value_t = 0.0, value_name = "EPS")]
        perturb: f64,
    },
    /// Vacuum expectation of Weyl operators along the ħ grid, by two paths.
    StateEval {
        /// One covector per line as `re im` pairs per mode.
        #[arg(long, value_name = "FILE")]
        phi: PathBuf,
    },
    /// The full numbered diagnostic suite plus checks on the input operator.
    Suite,
}

fn run_config(c: &Common) -> Result<RunConfig, CliError> {
    let source = match (&c.input, c.sprinkle) {
        (Some(path), _) => SourceSpec::File {
            path: path.clone(),
            kind: c.input_kind,
        },
        (None, Some(density)) => SourceSpec::Sprinkle { density, seed: c.seed },
        (None, None) => SourceSpec::Rotation { modes: 1 },
    };
    let grid: HbarGrid = c
        .hbar_grid
        .parse()
        .map_err(|e| CliError::Input(format!("--hbar-grid {:?}: {e}", c.hbar_grid)))?;
    let cfg = RunConfig {
        source,
        grid,
        cutoff: c.cutoff,
        tol: c.tol,
        seed: c.seed,
        coupling: c.coupling,
        out: c.out.clone(),
        format: c.format,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SJQ_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("SJQ_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn emit(cfg: &RunConfig, outcome: &Outcome, default: Format) -> Result<(), CliError> {
    match &cfg.out {
        Some(dir) => {
            let path = dir.join(format!("{}.{}", outcome.stem, cfg.format_or(default).extension()));
            let write = |p: &std::path::Path| -> std::io::Result<()> {
                std::fs::create_dir_all(dir)?;
                std::fs::write(p, &outcome.body)
            };
            write(&path).map_err(|source| CliError::Write {
                path: path.display().to_string(),
                source,
            })?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", outcome.body),
    }
    eprintln!("{}", outcome.summary);
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let cfg = run_config(&cli.common)?;
    let (outcome, default) = match &cli.command {
        Command::Decompose => (commands::decompose(&cfg)?, Format::Json),
        Command::SjCheck { perturb } => (commands::sj_check(&cfg, *perturb)?, Format::Json),
        Command::StateEval { phi } => (commands::state_eval(&cfg, phi)?, Format::Csv),
        Command::Suite => (commands::suite(&cfg)?, Format::Json),
    };
    emit(&cfg, &outcome, default)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("sjq: error: {e}");
            ExitCode::from(2)
        }
    }
}

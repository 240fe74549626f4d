//! Configuration-driven front end: scenario sweeps, Monte Carlo validation
//! runs, antenna-convergence studies, and transform verification, with
//! deterministic CSV / JSON-lines outputs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
//! 4 verification failure.

mod config;
mod records;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use config::{OutputFormat, RunConfig, VerifyConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted (overrides the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed override for Monte Carlo and verification sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format override.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Fill the wall_ms column with measured times. Off by default so that
    /// identical config and seed produce byte-identical files.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Parser)]
#[command(
    name = "relaymi",
    about = "Asymptotic mutual information of multi-hop MIMO relay networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Deterministic asymptotic mutual information over an SNR grid.
    Asymptotic(RunArgs),
    /// Asymptotic values plus seeded finite-size Monte Carlo statistics.
    Simulate(RunArgs),
    /// Concentration of the instantaneous mutual information as antenna
    /// counts grow.
    Convergence(RunArgs),
    /// Numerical verification of the transform and power identities.
    #[command(name = "verify-transforms")]
    VerifyTransforms(RunArgs),
}

/// Reduced schema accepted by `verify-transforms`: just the `[verify]` and
/// `[output]` tables.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyOnlyConfig {
    #[serde(default)]
    verify: VerifyConfig,
    #[serde(default)]
    output: config::OutputConfig,
}

fn read_config(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))
}

fn configure_workers() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("RELAYMI_WORKERS") {
        let workers: usize = value
            .parse()
            .map_err(|_| CliError::Config(format!("RELAYMI_WORKERS: not a count: {value}")))?;
        if workers == 0 {
            return Err(CliError::Config("RELAYMI_WORKERS: must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn apply_overrides(cfg: &mut RunConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        if let Some(mc) = cfg.monte_carlo.as_mut() {
            mc.seed = seed;
        }
    }
    if let Some(format) = args.format {
        cfg.output.format = format.into();
    }
    if let Some(path) = &args.output {
        cfg.output.path = Some(path.display().to_string());
    }
}

fn run_sweep(args: &RunArgs, which: &Command) -> Result<(), CliError> {
    let mut cfg = RunConfig::parse(&read_config(&args.config)?)?;
    apply_overrides(&mut cfg, args);
    let (records, dump) = match which {
        Command::Asymptotic(_) => (run::cmd_asymptotic(&cfg)?, None),
        Command::Simulate(_) => {
            let (records, dump) = run::cmd_simulate(&cfg)?;
            (records, Some(dump))
        }
        Command::Convergence(_) => (run::cmd_convergence(&cfg)?, None),
        Command::VerifyTransforms(_) => unreachable!(),
    };
    let content = records::render(&records, cfg.output.format, args.timings);
    records::write_output(cfg.output.path.as_deref(), &content)?;

    if let Some(dump) = dump {
        if !dump.rows.is_empty() {
            let base = cfg.output.path.as_deref().ok_or_else(|| {
                CliError::Config(
                    "monte_carlo.dump_trials: requires an output path for the sidecar file"
                        .into(),
                )
            })?;
            let mut content = String::from("sweep_value,trial,mi_instantaneous\n");
            for (value, trial, mi) in &dump.rows {
                content.push_str(&format!("{value},{trial},{mi}\n"));
            }
            records::write_output(Some(&format!("{base}.trials.csv")), &content)?;
        }
    }
    Ok(())
}

fn run_verify(args: &RunArgs) -> Result<(), CliError> {
    let text = read_config(&args.config)?;
    let (verify_cfg, mut output_cfg) = match RunConfig::parse(&text) {
        Ok(cfg) => (cfg.verify.clone(), cfg.output.clone()),
        Err(full_err) => match toml::from_str::<VerifyOnlyConfig>(&text) {
            Ok(v) => (v.verify, v.output),
            Err(_) => return Err(full_err),
        },
    };
    if let Some(path) = &args.output {
        output_cfg.path = Some(path.display().to_string());
    }
    if let Some(format) = args.format {
        output_cfg.format = format.into();
    }
    let seed = args.seed.unwrap_or(1);
    let results = verify::run_all(&verify_cfg, seed)?;
    print!("{}", verify::render_report(&results));
    if let Some(path) = output_cfg.path.as_deref() {
        let jsonl = matches!(output_cfg.format, OutputFormat::Jsonl);
        records::write_output(Some(path), &verify::render_records(&results, jsonl))?;
    }
    let failures: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join(", ")))
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    configure_workers()?;
    match &cli.command {
        Command::Asymptotic(args) | Command::Simulate(args) | Command::Convergence(args) => {
            run_sweep(args, &cli.command)
        }
        Command::VerifyTransforms(args) => run_verify(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

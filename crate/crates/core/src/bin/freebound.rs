use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use freebound::config::RunConfig;
use freebound::pipeline::{cmd_analyze, cmd_domain, cmd_radial, cmd_solve, RunStatus};
use freebound::verify::cmd_verify;
use freebound::{Error, Result};

/// Free-boundary laboratory for -Δu = λ|u|^{β-1}u - |u|^{α-1}u.
///
/// Exit codes: 0 success, 1 partial failure (some sweep steps or acceptance
/// checks failed), 2 invalid input, 3 no usable result.
#[derive(Debug, Parser)]
#[command(name = "freebound", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "run")]
    out: PathBuf,
    /// PRNG seed for the multistart perturbations.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    /// Use the unit ball instead of the dumbbell.
    #[arg(long, global = true)]
    ball_only: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Barrier profile, λ*, and the scaling-law audit.
    Radial,
    /// Certified domain, boundary polyline and mesh.
    Domain,
    /// Continuation sweep toward λ* plus flux analysis.
    Solve,
    /// Recompute the analysis from the stored fields.
    Analyze,
    /// Run the acceptance checks against a finished run.
    Verify,
}

fn run(cli: &Cli) -> Result<RunStatus> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.ball_only |= cli.ball_only;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let out = &cli.out;
    match cli.command {
        Command::Radial => cmd_radial(&cfg, out),
        Command::Domain => cmd_domain(&cfg, out),
        Command::Solve => cmd_solve(&cfg, out),
        Command::Analyze => cmd_analyze(&cfg, out),
        Command::Verify => {
            let (status, report) = cmd_verify(&cfg, out)?;
            print!("{}", report.to_text());
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => {
            if status != RunStatus::Success {
                log::warn!("finished with status {status:?}");
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_invalid_input() { 2 } else { 1 })
        }
    }
}

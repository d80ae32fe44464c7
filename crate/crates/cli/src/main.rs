use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fraclap_cli::run::{run_bounds, run_family, run_potential, run_solve, run_verify};
use fraclap_cli::{CliError, RunConfig, RunContext};

#[derive(Parser)]
#[command(name = "fraclap", version, about = "Riesz potentials and monotone solutions of a fractional semilinear equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML or JSON run configuration (by extension); defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Family members solved concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true)]
    no_plots: bool,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Riesz potential of the configured source.
    Potential,
    /// Decay regime, fitted slope and envelope constants.
    Bounds,
    /// Monotone iteration between the sub- and supersolution for one `a`.
    Solve,
    /// One solution per entry of `a_list` under a shared theta.
    Family,
    /// Full invariant suite; exits 3 when a check fails.
    Verify,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.jobs == 0 {
        return Err(CliError::Invalid {
            name: "jobs",
            reason: "must be at least 1".into(),
        });
    }
    let ctx = RunContext {
        out_dir: cfg.out_dir.clone(),
        plots: !cli.no_plots,
        jobs: cli.jobs,
    };
    let summary = match cli.command {
        Command::Potential => run_potential(&cfg, &ctx)?,
        Command::Bounds => run_bounds(&cfg, &ctx)?,
        Command::Solve => run_solve(&cfg, &ctx)?,
        Command::Family => run_family(&cfg, &ctx)?,
        Command::Verify => run_verify(&cfg, &ctx)?,
    };
    Ok(summary.line().to_string())
}

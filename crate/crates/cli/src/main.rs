use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quadsense_cli::config::Mode;
use quadsense_cli::{run, CliError, Format, RunConfig, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "quadsense", version, about = "Sensing-scheme sweeps for four-target detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep pure schemes over a grid of time budgets.
    SweepTime(Flags),
    /// Sweep hybrid configurations over the quadruplet share at fixed T.
    SweepAlpha(Flags),
    /// Search group-constant allocations at fixed T.
    Search(Flags),
    /// Evaluate a single scheme.
    Estimate(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per evaluation.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Results table path; the manifest goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

fn load(flags: &Flags) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(&flags.config).map_err(|source| CliError::Io { path: flags.config.clone(), source })?;
    let mut cfg = RunConfig::from_toml(&text)?;
    cfg.seed = flags.seed.or(cfg.seed);
    cfg.samples = flags.samples.or(cfg.samples);
    cfg.workers = flags.workers.or(cfg.workers);
    cfg.out = flags.out.clone().or(cfg.out);
    cfg.format = flags.format.or(cfg.format);
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = match &cli.command {
        Command::SweepTime(f) => (Mode::SweepTime, f),
        Command::SweepAlpha(f) => (Mode::SweepAlpha, f),
        Command::Search(f) => (Mode::Search, f),
        Command::Estimate(f) => (Mode::Estimate, f),
    };
    let outcome = load(flags).and_then(|cfg| run(&cfg, mode));
    match outcome {
        Ok(out) => {
            let failures = &out.execution.output.failures;
            for f in failures {
                eprintln!("failed cell: {} T={} metric={}: {}", f.scheme, f.t, f.metric, f.error);
            }
            eprintln!(
                "wrote {} rows to {} ({} failed cells); manifest {}",
                out.execution.output.rows.len(),
                out.table_path.display(),
                failures.len(),
                out.manifest_path.display()
            );
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

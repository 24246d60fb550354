use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use contraction_cli::{commands, config, job_count, CliError};

#[derive(Parser)]
#[command(
    name = "contraction",
    version,
    about = "Checks of posterior contraction bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed list with a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to CONTRACTION_JOBS.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact divergence identities on the built-in discrete battery.
    IdentitySuite,
    /// Moment and evidence bound checks.
    Verify,
    /// Contraction-rate curves.
    Contract,
    /// Covering numbers and Hausdorff entropy profiles.
    Entropy,
    /// Re-validate the records in an output directory and summarise them.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::IdentitySuite => "identity-suite",
            Command::Verify => "verify",
            Command::Contract => "contract",
            Command::Entropy => "entropy",
            Command::Report => "report",
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => config::RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let command = cli.command.name();
    match job_count(cli.jobs)? {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::config(e.to_string()))?
            .install(|| commands::run(command, &cfg, &out)),
        None => commands::run(command, &cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks failed; see the summary in the output directory");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

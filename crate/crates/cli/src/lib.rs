//! Config-driven runner: subcommands, registries and report writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod records;

pub use error::{CliError, Result};

pub const JOBS_ENV: &str = "CONTRACTION_JOBS";

/// Worker count: `--jobs`, else the environment variable, else rayon's default.
pub fn job_count(flag: Option<usize>) -> Result<Option<usize>> {
    let jobs =
        match flag {
            Some(j) => Some(j),
            None => match std::env::var(JOBS_ENV) {
                Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                    CliError::config(format!("{JOBS_ENV}={v} is not a worker count"))
                })?),
                Err(_) => None,
            },
        };
    if jobs == Some(0) {
        return Err(CliError::config("job count must be at least 1"));
    }
    Ok(jobs)
}

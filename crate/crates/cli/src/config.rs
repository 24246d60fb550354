//! Run configuration (TOML) and the model/prior registries it names.
//!
//! ```toml
//! seeds = [1, 2]
//! mc_budget = 10000
//! n_grid = [64, 256, 1024]
//! output_dir = "out"
//!
//! [experiment]
//! name = "bernoulli-grid"   # bernoulli-grid | inid-grid | two-state-chain | poisson-regression | gauss-seq | ar
//! n = 20
//! epsilon = 0.3
//!
//! [prior]
//! name = "uniform"          # uniform | grid | partition-uniform | gauss-seq | step-uniform
//! weights = [0.2, 0.2, 0.2, 0.2, 0.2]
//! theta1 = [0, 1, 2]
//!
//! [constants]
//! alpha = 0.5
//! delta = 0.25
//! beta = 0.5
//! r = [2.0, 4.0, 8.0]
//!
//! [verify]
//! checks = ["prop2", "prop3"]
//! instances = ["prop2-bernoulli-a0.5"]
//!
//! [entropy]
//! deltas = [0.05, 0.1, 0.2]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use contraction::verifier::battery::{bernoulli_grid, inid_grid, two_state_chain};
use contraction::verifier::{poisson_partition_instance, PartitionInstance};
use contraction::DiscreteExperiment;

use crate::error::{CliError, Result};

pub const COMMANDS: [&str; 5] = ["identity-suite", "verify", "contract", "entropy", "report"];
pub const EXPERIMENTS: [&str; 6] = [
    "bernoulli-grid",
    "inid-grid",
    "two-state-chain",
    "poisson-regression",
    "gauss-seq",
    "ar",
];
pub const PRIORS: [&str; 5] = [
    "uniform",
    "grid",
    "partition-uniform",
    "gauss-seq",
    "step-uniform",
];
pub const CHECKS: [&str; 9] = [
    "prop2",
    "prop0",
    "prop3",
    "prop4",
    "lemma2",
    "lemma4",
    "lemma5",
    "shell_condition",
    "global_condition",
];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub mc_budget: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub entropy: EntropySection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: Option<String>,
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    /// Gaussian sequence smoothness.
    pub gamma: Option<f64>,
    /// Gaussian sequence prior dimension constant, k = ⌊c·n^{1/(2γ+1)}⌋.
    pub c: Option<f64>,
    /// AR amplitude bound M.
    pub amplitude: Option<f64>,
    pub max_cells: Option<usize>,
    pub bins: Option<usize>,
    /// Posterior draws per replicate (Gaussian sequence).
    pub draws: Option<usize>,
    /// Partition cells (Poisson regression).
    pub cells: Option<usize>,
    /// Likelihood power for pseudoposterior curves.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub name: Option<String>,
    pub weights: Option<Vec<f64>>,
    pub theta1: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    /// Prop 4's δ as a fraction of its cap √a₀/(2√a₁).
    pub delta_fraction: Option<f64>,
    pub c: Option<f64>,
    pub c1: Option<f64>,
    pub k3: Option<f64>,
    pub j_max: Option<usize>,
    pub r: Option<Vec<f64>>,
    pub replicates: Option<usize>,
    pub quantile: Option<f64>,
    pub slack_sigmas: Option<f64>,
    pub slope_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub instances: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    pub deltas: Option<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message())))
}

fn registry_miss(kind: &'static str, name: &str, known: &[&str]) -> CliError {
    CliError::RegistryMiss {
        kind,
        name: name.to_string(),
        known: known.join(", "),
    }
}

pub fn check_in_range(what: &str, v: f64, lo: f64, hi: f64, reason: &str) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{what} = {v} must lie in ({lo}, {hi}): {reason}"
        )))
    }
}

impl RunConfig {
    pub fn validate(&self, command: &str) -> Result<()> {
        if let Some(c) = &self.command {
            if !COMMANDS.contains(&c.as_str()) {
                return Err(registry_miss("command", c, &COMMANDS));
            }
            if c != command {
                return Err(CliError::config(format!(
                    "config is for `{c}` but `{command}` was requested"
                )));
            }
        }
        if let Some(name) = &self.experiment.name {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(registry_miss("experiment", name, &EXPERIMENTS));
            }
        }
        if let Some(name) = &self.prior.name {
            if !PRIORS.contains(&name.as_str()) {
                return Err(registry_miss("prior", name, &PRIORS));
            }
        }
        for c in &self.verify.checks {
            if !CHECKS.contains(&c.as_str()) {
                return Err(registry_miss("check", c, &CHECKS));
            }
        }
        if let Some(grid) = &self.n_grid {
            if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::config(
                    "n_grid must be positive and strictly increasing",
                ));
            }
        }
        if self.mc_budget == Some(0) {
            return Err(CliError::config("mc_budget must be positive"));
        }
        if let Some(r) = &self.constants.r {
            if r.is_empty() || r.iter().any(|v| !(*v > 0.0)) {
                return Err(CliError::config(
                    "r must be a non-empty list of positive multipliers",
                ));
            }
        }
        let k = &self.constants;
        if let Some(q) = k.quantile {
            check_in_range("quantile", q, 0.0, 1.0, "a posterior quantile level")?;
        }
        if let Some(b) = k.beta {
            check_in_range(
                "beta",
                b,
                0.0,
                1.0,
                "the likelihood power of a pseudoposterior",
            )?;
        }
        if let Some(e) = self.experiment.epsilon {
            if !(e > 0.0) {
                return Err(CliError::config(format!("epsilon = {e} must be positive")));
            }
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![1]
        } else {
            self.seeds.clone()
        }
    }

    pub fn slack(&self) -> f64 {
        self.constants.slack_sigmas.unwrap_or(3.0)
    }
}

/// A finite-parameter experiment from the registry.
pub enum FiniteExperiment {
    Discrete(DiscreteExperiment),
    Chain(contraction::models::FiniteMarkovChain),
    Partition(Box<PartitionInstance>),
}

impl FiniteExperiment {
    pub fn num_params(&self) -> usize {
        use contraction::verifier::FiniteModel;
        match self {
            FiniteExperiment::Discrete(e) => e.num_params(),
            FiniteExperiment::Chain(c) => FiniteModel::num_params(c),
            FiniteExperiment::Partition(p) => p.experiment.num_params(),
        }
    }

    pub fn default_n(&self) -> usize {
        match self {
            FiniteExperiment::Partition(p) => p.model.n(),
            _ => 20,
        }
    }
}

pub fn finite_experiment(cfg: &RunConfig, name: &str) -> Result<FiniteExperiment> {
    Ok(match name {
        "bernoulli-grid" => FiniteExperiment::Discrete(bernoulli_grid()),
        "inid-grid" => FiniteExperiment::Discrete(inid_grid()),
        "two-state-chain" => FiniteExperiment::Chain(two_state_chain()),
        "poisson-regression" => {
            let n = cfg.experiment.n.unwrap_or(50);
            let cells = cfg.experiment.cells.unwrap_or(20);
            if cells == 0 {
                return Err(CliError::config("cells must be positive"));
            }
            FiniteExperiment::Partition(Box::new(poisson_partition_instance(n, cells)?))
        }
        other if EXPERIMENTS.contains(&other) => {
            return Err(CliError::config(format!(
                "`{other}` has a continuous parameter space; use `contract`"
            )))
        }
        other => return Err(registry_miss("experiment", other, &EXPERIMENTS)),
    })
}

/// Prior weights over a finite experiment's parameters.
pub fn finite_weights(cfg: &RunConfig, exp: &FiniteExperiment) -> Result<Vec<f64>> {
    let p = exp.num_params();
    let name = cfg.prior.name.as_deref().unwrap_or(match exp {
        FiniteExperiment::Partition(_) => "partition-uniform",
        _ => "uniform",
    });
    match name {
        "uniform" => Ok(vec![1.0 / p as f64; p]),
        "grid" => {
            let w = cfg
                .prior
                .weights
                .clone()
                .ok_or_else(|| CliError::config("prior `grid` needs `weights`"))?;
            if w.len() != p {
                return Err(CliError::config(format!(
                    "prior has {} weights, experiment has {p} parameters",
                    w.len()
                )));
            }
            if w.iter().any(|v| !(*v >= 0.0)) {
                return Err(CliError::config("prior weights must be non-negative"));
            }
            let s: f64 = w.iter().sum();
            if !(s > 0.0) {
                return Err(CliError::config("prior weights sum to zero"));
            }
            Ok(w.into_iter().map(|v| v / s).collect())
        }
        "partition-uniform" => match exp {
            FiniteExperiment::Partition(inst) => Ok(inst.weights()),
            _ => Err(CliError::config(
                "prior `partition-uniform` is only defined for poisson-regression",
            )),
        },
        other => Err(CliError::config(format!(
            "prior `{other}` does not apply to a finite experiment"
        ))),
    }
}

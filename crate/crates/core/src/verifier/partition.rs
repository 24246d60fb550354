//! Poisson regression with a prior that is uniform over a partition of
//! logistic link functions, and its concentration-only conditions.

use serde::{Deserialize, Serialize};

use crate::divergences::avg_hellinger;
use crate::entropy::WeightedParameterSet;
use crate::error::Result;
use crate::experiment::{DiscreteExperiment, Experiment, ParameterId};
use crate::models::{Link, PoissonRegModel};
use crate::neighborhoods::{prior_mass, NeighborhoodKind, NeighborhoodSpec, PriorSource};
use crate::priors::PriorSpec;

use super::shell::{check_shell_condition, pseudoposterior_condition, ShellParams, ShellReport};

pub const PARTITION_LOWER: f64 = 1.0;
pub const PARTITION_UPPER: f64 = 4.0;
const SCALES: [f64; 3] = [0.5, 0.6, 0.7];

#[derive(Debug, Clone)]
pub struct PartitionInstance {
    pub model: PoissonRegModel,
    pub links: Vec<Link>,
    pub prior: PriorSpec,
    pub experiment: DiscreteExperiment,
    pub epsilon_n: f64,
}

impl PartitionInstance {
    pub fn weights(&self) -> Vec<f64> {
        self.prior
            .finite_weights()
            .expect("partition prior is finite")
    }

    /// d_n⁰(θ, θ₀) for every link.
    pub fn distances_to_truth(&self) -> Result<Vec<f64>> {
        let n = self.model.n();
        let t0 = *self.experiment.truth();
        (0..self.links.len())
            .map(|t| avg_hellinger(&self.experiment.coordinate_pairs(t0, ParameterId(t), n)))
            .collect()
    }
}

/// n equispaced covariates on [−2, 2]; `cells` link locations on [−1.9, 1.9],
/// each cell holding three scales with the middle one as representative;
/// εₙ = n^{−1/3}. The truth is the representative of the middle cell.
pub fn poisson_partition_instance(n: usize, cells: usize) -> Result<PartitionInstance> {
    let covariates: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                0.0
            } else {
                -2.0 + 4.0 * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let model = PoissonRegModel::new(covariates, PARTITION_LOWER, PARTITION_UPPER)?;
    let mut links = Vec::new();
    let mut groups = Vec::new();
    let mut reps = Vec::new();
    for c in 0..cells {
        let location = if cells == 1 {
            0.0
        } else {
            -1.9 + 3.8 * c as f64 / (cells - 1) as f64
        };
        let start = links.len();
        for &scale in &SCALES {
            links.push(Link::Logistic { location, scale });
        }
        groups.push((start..start + SCALES.len()).collect::<Vec<_>>());
        reps.push(start + 1);
    }
    let truth = reps[cells / 2];
    let prior = PriorSpec::partition_uniform(groups, reps)?;
    let experiment = model.to_discrete_experiment("poisson-regression", &links, truth)?;
    Ok(PartitionInstance {
        model,
        links,
        prior,
        experiment,
        epsilon_n: (n as f64).powf(-1.0 / 3.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConditionReport {
    pub cells: usize,
    pub n: usize,
    pub epsilon_n: f64,
    pub c1: f64,
    pub wbar_mass: f64,
    pub far_mass: f64,
    /// Π(d > εₙ) ≤ e^{c₁nεₙ²} Π(W̄ₙ).
    pub pseudoposterior_condition: bool,
    /// Shell condition with K₃ = 0 and the W̄ₙ mass.
    pub shell: ShellReport,
}

impl PartitionConditionReport {
    pub fn passed(&self) -> bool {
        self.pseudoposterior_condition && self.shell.all_pass()
    }
}

pub fn partition_condition(
    inst: &PartitionInstance,
    alpha: f64,
    c1: f64,
    j_max: usize,
) -> Result<PartitionConditionReport> {
    let n = inst.model.n();
    let weights = inst.weights();
    let points: Vec<ParameterId> = (0..inst.links.len()).map(ParameterId).collect();
    let spec = NeighborhoodSpec::new(NeighborhoodKind::WBar, inst.epsilon_n, n)?;
    let wbar_mass = prior_mass(
        &spec,
        &inst.experiment,
        PriorSource::Finite {
            points: &points,
            weights: &weights,
        },
        1,
        0,
    )?
    .estimate;
    let d0 = inst.distances_to_truth()?;
    let far_mass: f64 = d0
        .iter()
        .zip(&weights)
        .filter(|(d, _)| **d > inst.epsilon_n)
        .map(|(_, w)| w)
        .sum();
    let p = inst.links.len();
    let pairs: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    avg_hellinger(&inst.experiment.coordinate_pairs(
                        ParameterId(a),
                        ParameterId(b),
                        n,
                    ))
                    .unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    let set =
        WeightedParameterSet::from_metric((0..p).collect(), weights.clone(), |i, j| pairs[i][j])?;
    let params = ShellParams {
        epsilon_n: inst.epsilon_n,
        n,
        alpha,
        k3: 0.0,
        c1,
        radius_factor: 1.0,
        neighborhood_mass: wbar_mass,
    };
    let shell = check_shell_condition(&set, |i| d0[i], params, j_max)?;
    let neps = n as f64 * inst.epsilon_n * inst.epsilon_n;
    Ok(PartitionConditionReport {
        cells: match &inst.prior {
            PriorSpec::PartitionUniform { cells, .. } => cells.len(),
            _ => 0,
        },
        n,
        epsilon_n: inst.epsilon_n,
        c1,
        wbar_mass,
        far_mass,
        pseudoposterior_condition: pseudoposterior_condition(far_mass, wbar_mass, c1, neps),
        shell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_cell_lies_in_wbar() {
        let inst = poisson_partition_instance(30, 20).unwrap();
        assert_eq!(inst.links.len(), 60);
        let r = partition_condition(&inst, 0.5, 0.25, 6).unwrap();
        assert!(r.wbar_mass >= 1.0 / 20.0 - 1e-12, "{}", r.wbar_mass);
        assert!(r.passed(), "{r:?}");
    }
}

//! Registered check instances and the exact-identity suite.

use serde::{Deserialize, Serialize};

use crate::divergences::{
    affinity, hellinger_sq, hellinger_star_sq, inverse_root_moment, product_affinity_check,
};
use crate::error::{Error, Result};
use crate::experiment::{DiscreteExperiment, ParameterId, PmfTable};
use crate::models::{FiniteMarkovChain, MarkovModel};
use crate::numeric::par_map;
use crate::rng;

use super::checks::{
    check_lemma, check_prop0_prop3, check_prop2, check_prop4, BoundCheck, BoundSetup, CheckName,
    EvidenceLemma, FiniteMetric, DEFAULT_SLACK_SIGMAS,
};

/// Bernoulli(p) for p ∈ {0.1, 0.3, 0.5, 0.7, 0.9}, truth 0.5.
pub fn bernoulli_grid() -> DiscreteExperiment {
    let rows = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&p| vec![1.0 - p, p])
        .collect();
    DiscreteExperiment::iid("bernoulli-grid", rows, 2).expect("valid table")
}

/// Three outcomes, odd and even coordinates on different tables, truth 0.
pub fn inid_grid() -> DiscreteExperiment {
    let odd = PmfTable::new(vec![
        vec![0.2, 0.3, 0.5],
        vec![0.3, 0.3, 0.4],
        vec![0.6, 0.2, 0.2],
        vec![0.1, 0.1, 0.8],
    ])
    .expect("valid table");
    let even = PmfTable::new(vec![
        vec![0.5, 0.3, 0.2],
        vec![0.4, 0.3, 0.3],
        vec![0.2, 0.2, 0.6],
        vec![0.7, 0.2, 0.1],
    ])
    .expect("valid table");
    DiscreteExperiment::new("inid-grid", vec![odd, even], ParameterId(0)).expect("valid experiment")
}

/// Four two-state chains given by flip probabilities, truth (0.3, 0.3).
pub fn two_state_chain() -> FiniteMarkovChain {
    FiniteMarkovChain::two_state(
        "two-state-chain",
        &[(0.3, 0.3), (0.4, 0.2), (0.7, 0.6), (0.1, 0.8)],
        0,
    )
    .expect("valid chain")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinModel {
    BernoulliGrid,
    InidGrid,
    TwoStateChain,
}

impl BuiltinModel {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModel::BernoulliGrid => "bernoulli-grid",
            BuiltinModel::InidGrid => "inid-grid",
            BuiltinModel::TwoStateChain => "two-state-chain",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::BernoulliGrid, Self::InidGrid, Self::TwoStateChain]
            .into_iter()
            .find(|m| m.name() == s)
    }

    pub fn num_params(&self) -> usize {
        match self {
            BuiltinModel::BernoulliGrid => 5,
            BuiltinModel::InidGrid | BuiltinModel::TwoStateChain => 4,
        }
    }
}

/// Which inequality an instance exercises, with its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum InstanceKind {
    Prop2 {
        alpha: f64,
        delta: f64,
    },
    Prop0 {
        alpha: f64,
        beta: f64,
    },
    Prop3 {
        alpha: f64,
        beta: f64,
    },
    /// δ given as a fraction of its cap √a₀/(2√a₁).
    Prop4 {
        alpha: f64,
        delta_fraction: f64,
    },
    Lemma2 {
        c: f64,
    },
    Lemma4 {
        beta: f64,
        c: f64,
    },
    Lemma5 {
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryInstance {
    pub id: String,
    pub model: BuiltinModel,
    pub kind: InstanceKind,
    pub n: usize,
    pub epsilon: f64,
    /// Prior weights; `None` is uniform.
    pub weights: Option<Vec<f64>>,
    pub theta1: Option<Vec<usize>>,
}

impl BatteryInstance {
    fn new(id: &str, model: BuiltinModel, kind: InstanceKind, n: usize, epsilon: f64) -> Self {
        Self {
            id: id.to_string(),
            model,
            kind,
            n,
            epsilon,
            weights: None,
            theta1: None,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights.clone().unwrap_or_else(|| {
            let p = self.model.num_params();
            vec![1.0 / p as f64; p]
        })
    }
}

/// The registered battery: every instance has n ≤ 30, so each MC lhs is
/// also computed exactly.
pub fn builtin_instances() -> Vec<BatteryInstance> {
    use BuiltinModel::*;
    use InstanceKind::*;
    let mut restricted = BatteryInstance::new(
        "prop2-bernoulli-theta1",
        BernoulliGrid,
        Prop2 {
            alpha: 0.5,
            delta: 0.25,
        },
        20,
        0.3,
    );
    restricted.theta1 = Some(vec![0, 1, 2]);
    vec![
        BatteryInstance::new(
            "prop2-bernoulli-a0.5",
            BernoulliGrid,
            Prop2 {
                alpha: 0.5,
                delta: 0.25,
            },
            20,
            0.3,
        ),
        BatteryInstance::new(
            "prop2-bernoulli-a0.25",
            BernoulliGrid,
            Prop2 {
                alpha: 0.25,
                delta: 0.25,
            },
            20,
            0.3,
        ),
        BatteryInstance::new(
            "prop2-bernoulli-a0.75",
            BernoulliGrid,
            Prop2 {
                alpha: 0.75,
                delta: 0.25,
            },
            20,
            0.3,
        ),
        restricted,
        BatteryInstance::new(
            "prop2-inid",
            InidGrid,
            Prop2 {
                alpha: 0.5,
                delta: 0.25,
            },
            20,
            0.25,
        ),
        BatteryInstance::new(
            "prop0-bernoulli-b0.5",
            BernoulliGrid,
            Prop0 {
                alpha: 0.5,
                beta: 0.5,
            },
            20,
            0.3,
        ),
        BatteryInstance::new(
            "prop3-inid-b0.3",
            InidGrid,
            Prop3 {
                alpha: 0.5,
                beta: 0.3,
            },
            20,
            0.25,
        ),
        BatteryInstance::new(
            "prop3-inid-b0.5",
            InidGrid,
            Prop3 {
                alpha: 0.5,
                beta: 0.5,
            },
            20,
            0.25,
        ),
        BatteryInstance::new(
            "prop3-inid-b0.7",
            InidGrid,
            Prop3 {
                alpha: 0.5,
                beta: 0.7,
            },
            20,
            0.25,
        ),
        BatteryInstance::new(
            "prop4-chain-half-cap",
            TwoStateChain,
            Prop4 {
                alpha: 0.25,
                delta_fraction: 0.5,
            },
            20,
            0.2,
        ),
        BatteryInstance::new(
            "prop4-chain-0.9-cap",
            TwoStateChain,
            Prop4 {
                alpha: 0.25,
                delta_fraction: 0.9,
            },
            20,
            0.2,
        ),
        BatteryInstance::new(
            "lemma2-bernoulli",
            BernoulliGrid,
            Lemma2 { c: 1.0 },
            30,
            0.2,
        ),
        BatteryInstance::new(
            "lemma4-inid-b0.5",
            InidGrid,
            Lemma4 { beta: 0.5, c: 1.0 },
            30,
            0.2,
        ),
        BatteryInstance::new("lemma5-chain", TwoStateChain, Lemma5 { c: 1.0 }, 20, 0.2),
    ]
}

pub fn find_instance(id: &str) -> Option<BatteryInstance> {
    builtin_instances().into_iter().find(|i| i.id == id)
}

pub fn run_instance(inst: &BatteryInstance, mc_budget: usize, seed: u64) -> Result<BoundCheck> {
    let weights = inst.weights();
    let setup = BoundSetup {
        weights: &weights,
        theta1: inst.theta1.as_deref(),
        n: inst.n,
        epsilon: inst.epsilon,
        mc_budget,
        seed,
        slack_sigmas: DEFAULT_SLACK_SIGMAS,
    };
    let mut check = match inst.model {
        BuiltinModel::TwoStateChain => {
            let chain = two_state_chain();
            match inst.kind {
                InstanceKind::Prop4 {
                    alpha,
                    delta_fraction,
                } => {
                    let delta = delta_fraction * chain.bounds().delta_cap();
                    check_prop4(&chain, &setup, alpha, delta)
                }
                InstanceKind::Lemma5 { c } => check_lemma(
                    &chain,
                    &setup,
                    EvidenceLemma::Lemma5 {
                        a1: chain.bounds().a1,
                    },
                    c,
                ),
                _ => Err(unsupported(inst)),
            }
        }
        m => {
            let exp = if m == BuiltinModel::BernoulliGrid {
                bernoulli_grid()
            } else {
                inid_grid()
            };
            let metric = FiniteMetric::average_hellinger(&exp, inst.n);
            match inst.kind {
                InstanceKind::Prop2 { alpha, delta } => {
                    check_prop2(&exp, &metric, &setup, alpha, delta)
                }
                InstanceKind::Prop0 { alpha, beta } => {
                    check_prop0_prop3(&exp, &metric, &setup, alpha, beta, CheckName::Prop0)
                }
                InstanceKind::Prop3 { alpha, beta } => {
                    check_prop0_prop3(&exp, &metric, &setup, alpha, beta, CheckName::Prop3)
                }
                InstanceKind::Lemma2 { c } => check_lemma(&exp, &setup, EvidenceLemma::Lemma2, c),
                InstanceKind::Lemma4 { beta, c } => {
                    check_lemma(&exp, &setup, EvidenceLemma::Lemma4 { beta }, c)
                }
                _ => Err(unsupported(inst)),
            }
        }
    }?;
    check.config.model = format!("{}:{}", inst.model.name(), inst.id);
    Ok(check)
}

fn unsupported(inst: &BatteryInstance) -> Error {
    Error::UnsupportedKind {
        what: format!("{:?}", inst.kind),
        by: inst.model.name().to_string(),
    }
}

/// Runs instances concurrently; instance i uses seed stream ("battery", i).
pub fn run_battery(
    instances: &[BatteryInstance],
    mc_budget: usize,
    seed: u64,
) -> Vec<Result<BoundCheck>> {
    par_map(instances.len(), |i| {
        run_instance(
            &instances[i],
            mc_budget,
            rng::derive_seed(seed, "battery", i as u64),
        )
    })
}

/// One exact identity evaluated on a concrete pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub identity: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub pass: bool,
}

pub const IDENTITY_TOLERANCE: f64 = 1e-12;

fn record(identity: &str, instance: String, lhs: f64, rhs: f64) -> IdentityRecord {
    let abs_error = (lhs - rhs).abs();
    IdentityRecord {
        identity: identity.to_string(),
        instance,
        lhs,
        rhs,
        abs_error,
        pass: abs_error <= IDENTITY_TOLERANCE * lhs.abs().max(1.0),
    }
}

/// E_f√(f/g) = 1 + (3/2)H*² and E_f√(g/f) = 1 − H²/2 on every ordered pair
/// of the Bernoulli grid, plus both product identities on the i.n.i.d.
/// grid's n-fold laws for a few n.
pub fn identity_suite() -> Result<Vec<IdentityRecord>> {
    let mut out = Vec::new();
    let e = bernoulli_grid();
    for a in 0..e.num_params() {
        for b in 0..e.num_params() {
            if a == b {
                continue;
            }
            let (f, g) = (e.pmf(ParameterId(a), 0), e.pmf(ParameterId(b), 0));
            let inst = format!("bernoulli-grid[{a}|{b}]");
            out.push(record(
                "inverse_root_moment",
                inst.clone(),
                inverse_root_moment(f, g)?,
                1.0 + 1.5 * hellinger_star_sq(f, g)?,
            ));
            out.push(record(
                "affinity",
                inst,
                affinity(f, g)?,
                1.0 - 0.5 * hellinger_sq(f, g)?,
            ));
        }
    }
    let e = inid_grid();
    for n in [4usize, 8, 12] {
        for b in 1..e.num_params() {
            let pairs = e.coordinate_pairs(ParameterId(0), ParameterId(b), n);
            let p = product_affinity_check(&pairs)?;
            let inst = format!("inid-grid[0|{b}] n={n}");
            out.push(record(
                "product_affinity",
                inst.clone(),
                p.joint_affinity,
                p.factor_affinity,
            ));
            out.push(record(
                "product_inverse_root",
                inst,
                p.joint_inverse_root,
                p.factor_inverse_root,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_large_enough_and_unique() {
        let b = builtin_instances();
        assert!(b.len() >= 12);
        let mut ids: Vec<_> = b.iter().map(|i| i.id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), b.len());
        assert!(b.iter().all(|i| i.n <= 30));
        assert_eq!(
            BuiltinModel::from_name("inid-grid"),
            Some(BuiltinModel::InidGrid)
        );
    }

    #[test]
    fn identity_suite_passes() {
        let r = identity_suite().unwrap();
        assert!(r.len() >= 40);
        assert!(r.iter().all(|x| x.pass), "{:?}", r.iter().find(|x| !x.pass));
    }

    #[test]
    fn far_sets_are_not_empty() {
        for inst in builtin_instances() {
            let c = run_instance(&inst, 200, 1).unwrap();
            if inst.theta1.is_none()
                && !matches!(
                    inst.kind,
                    InstanceKind::Lemma2 { .. }
                        | InstanceKind::Lemma4 { .. }
                        | InstanceKind::Lemma5 { .. }
                )
            {
                assert!(c.lhs.estimate > 0.0, "{}", inst.id);
            }
        }
    }
}

//! Prior constructions: finite grids, uniform step-function coefficients,
//! conjugate Gaussian sequence priors, partition-uniform priors and the
//! data-dependent power prior behind pseudoposteriors.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, par_map};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorSpec {
    /// Finite prior on parameter indices.
    Grid { weights: Vec<f64> },
    /// β ~ U[−M, M]^K.
    StepUniform { amplitude: f64, cells: usize },
    /// θ₍ₖ₎ ~ N(0, diag(variances)), θₗ = 0 for l > k.
    GaussSeq { variances: Vec<f64> },
    /// Mass 1/K to each cell, spread uniformly over the cell's points.
    PartitionUniform {
        cells: Vec<Vec<usize>>,
        representatives: Vec<usize>,
    },
    /// Base prior reweighted by R_θ^{−(1−β)}; only evaluable once data are fixed.
    PowerData { beta: f64, base: Box<PriorSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Parameter {
    Index(usize),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorLogWeight {
    /// Log-density up to an additive constant.
    pub log_weight: f64,
    /// Exponent the posterior module applies to R_θ(x) on top of the weight.
    pub loglik_exponent: Option<f64>,
}

impl PriorSpec {
    pub fn grid(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyList);
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidWeights("negative prior weight".into()));
        }
        let s = compensated_sum(weights.iter().copied());
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("prior weights sum to {s}")));
        }
        Ok(PriorSpec::Grid { weights })
    }

    pub fn step_uniform(amplitude: f64, cells: usize) -> Result<Self> {
        if !(amplitude > 0.0) || cells == 0 {
            return Err(Error::Precondition(
                "step prior needs M > 0 and K ≥ 1".into(),
            ));
        }
        Ok(PriorSpec::StepUniform { amplitude, cells })
    }

    /// Σ_k = diag(1/(k·i^{2γ})), which meets αΣ_k⁻¹αᵀ ≤ k Σ αᵢ² i^{2γ} with constant 1.
    pub fn gauss_seq(k: usize, gamma: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyList);
        }
        Ok(PriorSpec::GaussSeq {
            variances: (1..=k)
                .map(|i| 1.0 / (k as f64 * (i as f64).powf(2.0 * gamma)))
                .collect(),
        })
    }

    /// Diagonal prior given by precisions λᵢ, required to satisfy λᵢ ≤ k·i^{2γ}.
    pub fn gauss_seq_with_precisions(precisions: &[f64], gamma: f64) -> Result<Self> {
        let k = precisions.len() as f64;
        for (i, l) in precisions.iter().enumerate() {
            let cap = k * ((i + 1) as f64).powf(2.0 * gamma);
            if !(*l > 0.0) || *l > cap * (1.0 + 1e-12) {
                return Err(Error::OutOfRange {
                    what: "prior precision",
                    value: *l,
                    lo: 0.0,
                    hi: cap,
                });
            }
        }
        Ok(PriorSpec::GaussSeq {
            variances: precisions.iter().map(|l| 1.0 / l).collect(),
        })
    }

    pub fn partition_uniform(cells: Vec<Vec<usize>>, representatives: Vec<usize>) -> Result<Self> {
        if cells.is_empty() || cells.iter().any(|c| c.is_empty()) {
            return Err(Error::EmptyList);
        }
        if representatives.len() != cells.len()
            || representatives
                .iter()
                .zip(&cells)
                .any(|(r, c)| !c.contains(r))
        {
            return Err(Error::Precondition(
                "each cell needs a representative inside it".into(),
            ));
        }
        let mut seen: Vec<usize> = cells.iter().flatten().copied().collect();
        seen.sort_unstable();
        let total = seen.len();
        seen.dedup();
        if seen.len() != total {
            return Err(Error::Precondition("partition cells overlap".into()));
        }
        Ok(PriorSpec::PartitionUniform {
            cells,
            representatives,
        })
    }

    pub fn power_data(beta: f64, base: PriorSpec) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::OutOfRange {
                what: "beta",
                value: beta,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(PriorSpec::PowerData {
            beta,
            base: Box::new(base),
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PriorSpec::Grid { .. } => "grid",
            PriorSpec::StepUniform { .. } => "step_uniform",
            PriorSpec::GaussSeq { .. } => "gauss_seq",
            PriorSpec::PartitionUniform { .. } => "partition_uniform",
            PriorSpec::PowerData { .. } => "power_data",
        }
    }

    /// Point masses for finite priors, indexed by parameter id.
    pub fn finite_weights(&self) -> Option<Vec<f64>> {
        match self {
            PriorSpec::Grid { weights } => Some(weights.clone()),
            PriorSpec::PartitionUniform { cells, .. } => {
                let size = cells.iter().flatten().max().map_or(0, |m| m + 1);
                let mut w = vec![0.0; size];
                let k = cells.len() as f64;
                for c in cells {
                    for &p in c {
                        w[p] = 1.0 / (k * c.len() as f64);
                    }
                }
                Some(w)
            }
            _ => None,
        }
    }

    /// Π(B_{i₁} ∪ … ∪ B_{iⱼ}) = j/K for distinct cells.
    pub fn union_mass(&self, cell_ids: &[usize]) -> Result<f64> {
        let PriorSpec::PartitionUniform { cells, .. } = self else {
            return Err(Error::UnsupportedKind {
                what: "cell union mass".into(),
                by: self.kind().into(),
            });
        };
        let mut ids = cell_ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.iter().any(|&i| i >= cells.len()) {
            return Err(Error::OutOfSupport);
        }
        Ok(ids.len() as f64 / cells.len() as f64)
    }

    /// One prior draw from the given stream.
    pub fn draw(&self, r: &mut StreamRng) -> Result<Parameter> {
        match self {
            PriorSpec::Grid { weights } => Ok(Parameter::Index(crate::experiment::draw_index(
                weights,
                r.random::<f64>(),
            ))),
            PriorSpec::StepUniform { amplitude, cells } => Ok(Parameter::Vector(
                (0..*cells)
                    .map(|_| r.random_range(-*amplitude..=*amplitude))
                    .collect(),
            )),
            PriorSpec::GaussSeq { variances } => Ok(Parameter::Vector(
                variances
                    .iter()
                    .map(|v| {
                        let z: f64 = StandardNormal.sample(r);
                        z * v.sqrt()
                    })
                    .collect(),
            )),
            PriorSpec::PartitionUniform { cells, .. } => {
                let c = &cells[r.random_range(0..cells.len())];
                Ok(Parameter::Index(c[r.random_range(0..c.len())]))
            }
            PriorSpec::PowerData { .. } => Err(Error::UnsupportedKind {
                what: "direct sampling".into(),
                by: "power_data prior".into(),
            }),
        }
    }

    /// `count` i.i.d. draws; draw i uses stream (seed, "prior-sample", i).
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Parameter>> {
        if count == 0 {
            return Err(Error::BudgetZero);
        }
        par_map(count, |i| {
            self.draw(&mut rng::stream(seed, "prior-sample", i as u64))
        })
        .into_iter()
        .collect()
    }

    pub fn log_weight(&self, theta: &Parameter) -> Result<PriorLogWeight> {
        let plain = |log_weight| PriorLogWeight {
            log_weight,
            loglik_exponent: None,
        };
        match (self, theta) {
            (PriorSpec::Grid { weights }, Parameter::Index(i)) => match weights.get(*i) {
                Some(w) if *w > 0.0 => Ok(plain(w.ln())),
                _ => Err(Error::OutOfSupport),
            },
            (PriorSpec::PartitionUniform { .. }, Parameter::Index(i)) => {
                match self.finite_weights().and_then(|w| w.get(*i).copied()) {
                    Some(w) if w > 0.0 => Ok(plain(w.ln())),
                    _ => Err(Error::OutOfSupport),
                }
            }
            (PriorSpec::StepUniform { amplitude, cells }, Parameter::Vector(b)) => {
                if b.len() != *cells || b.iter().any(|x| x.abs() > *amplitude) {
                    return Err(Error::OutOfSupport);
                }
                Ok(plain(-(*cells as f64) * (2.0 * amplitude).ln()))
            }
            (PriorSpec::GaussSeq { variances }, Parameter::Vector(t)) => {
                if t.iter().skip(variances.len()).any(|x| *x != 0.0) {
                    return Err(Error::OutOfSupport);
                }
                let q: f64 = t.iter().zip(variances).map(|(x, v)| x * x / v).sum();
                Ok(plain(-0.5 * q))
            }
            (PriorSpec::PowerData { beta, base }, _) => Ok(PriorLogWeight {
                log_weight: base.log_weight(theta)?.log_weight,
                loglik_exponent: Some(-(1.0 - beta)),
            }),
            _ => Err(Error::OutOfSupport),
        }
    }

    /// αΣ_k⁻¹αᵀ / (k Σ αᵢ² i^{2γ}) for the Gaussian sequence prior.
    pub fn condition_c_ratio(&self, alpha: &[f64], gamma: f64) -> Result<f64> {
        let PriorSpec::GaussSeq { variances } = self else {
            return Err(Error::UnsupportedKind {
                what: "condition (c)".into(),
                by: self.kind().into(),
            });
        };
        let k = variances.len() as f64;
        let num: f64 = alpha.iter().zip(variances).map(|(a, v)| a * a / v).sum();
        let den: f64 = alpha
            .iter()
            .enumerate()
            .map(|(i, a)| a * a * ((i + 1) as f64).powf(2.0 * gamma))
            .sum();
        Ok(num / (k * den))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_uniform_moments() {
        let p = PriorSpec::step_uniform(1.0, 3).unwrap();
        let draws = p.sample(4000, 5).unwrap();
        for k in 0..3 {
            let mean = draws
                .iter()
                .map(|d| match d {
                    Parameter::Vector(v) => v[k],
                    _ => unreachable!(),
                })
                .sum::<f64>()
                / 4000.0;
            assert!(mean.abs() < 3.0 / (12.0f64 * 4000.0).sqrt());
        }
        assert_eq!(draws, p.sample(4000, 5).unwrap());
    }

    #[test]
    fn gauss_seq_condition_c_equality() {
        let p = PriorSpec::gauss_seq(6, 1.0).unwrap();
        for a in [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.3, -1.0, 2.0, 0.1, 0.0, 5.0],
        ] {
            assert!((p.condition_c_ratio(&a, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        let lw = p
            .log_weight(&Parameter::Vector(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]))
            .unwrap();
        assert!((lw.log_weight + 0.5 * 6.0).abs() < 1e-12);
        let outside = Parameter::Vector(vec![0.0; 7].into_iter().chain([1.0]).collect());
        assert_eq!(p.log_weight(&outside), Err(Error::OutOfSupport));
        assert!(PriorSpec::gauss_seq_with_precisions(&[2.0, 9.0], 1.0).is_err());
        assert!(PriorSpec::gauss_seq_with_precisions(&[2.0, 8.0], 1.0).is_ok());
    }

    #[test]
    fn partition_prior_masses() {
        let p =
            PriorSpec::partition_uniform(vec![vec![0, 1, 2], vec![3], vec![4, 5]], vec![1, 3, 4])
                .unwrap();
        assert_eq!(p.union_mass(&[0, 2]).unwrap(), 2.0 / 3.0);
        let w = p.finite_weights().unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let draws = p.sample(3000, 1).unwrap();
        let in0 = draws
            .iter()
            .filter(|d| matches!(d, Parameter::Index(i) if *i <= 2))
            .count() as f64;
        let sd = (3000.0 * (1.0 / 3.0) * (2.0 / 3.0f64)).sqrt();
        assert!((in0 - 1000.0).abs() < 3.0 * sd);
        assert!(PriorSpec::partition_uniform(vec![vec![0], vec![0]], vec![0, 0]).is_err());
    }

    #[test]
    fn support_and_power_prior() {
        let s = PriorSpec::step_uniform(1.0, 2).unwrap();
        let a = s.log_weight(&Parameter::Vector(vec![0.5, -0.5])).unwrap();
        let b = s.log_weight(&Parameter::Vector(vec![0.9, 0.1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            s.log_weight(&Parameter::Vector(vec![1.5, 0.0])),
            Err(Error::OutOfSupport)
        );
        let p = PriorSpec::power_data(0.5, PriorSpec::grid(vec![0.5, 0.5]).unwrap()).unwrap();
        assert_eq!(
            p.log_weight(&Parameter::Index(1)).unwrap().loglik_exponent,
            Some(-0.5)
        );
        assert!(p.sample(1, 0).is_err());
        assert!(PriorSpec::power_data(1.0, s).is_err());
    }
}

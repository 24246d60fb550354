//! Poisson regression: Xᵢ ~ Poi(θ(zᵢ)) with an increasing link θ: ℝ → [L, U].

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::divergences::{poisson_hstar_bound, POISSON_TRUNC};
use crate::error::{Error, Result};
use crate::experiment::{DiscreteExperiment, ParameterId, PmfTable};

/// Increasing link functions with values in [L, U].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Link {
    /// L + (U − L) / (1 + e^{−(z − location)/scale}).
    Logistic { location: f64, scale: f64 },
    /// Constant rate (non-decreasing limit case).
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonRegModel {
    covariates: Vec<f64>,
    lower: f64,
    upper: f64,
}

/// Tail mass allowed beyond the truncation point.
pub const TAIL_MASS: f64 = 1e-12;

impl PoissonRegModel {
    pub fn new(covariates: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if covariates.is_empty() {
            return Err(Error::EmptyList);
        }
        if !(lower > 0.0) || upper < lower {
            return Err(Error::OutOfRange {
                what: "L",
                value: lower,
                lo: 0.0,
                hi: upper,
            });
        }
        Ok(Self {
            covariates,
            lower,
            upper,
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.len()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    pub fn rate(&self, link: &Link, i: usize) -> f64 {
        match *link {
            Link::Logistic { location, scale } => {
                let z = self.covariates[i];
                self.lower + (self.upper - self.lower) / (1.0 + (-(z - location) / scale).exp())
            }
            Link::Constant(c) => c.clamp(self.lower, self.upper),
        }
    }

    /// e^{−θ(zᵢ)} θ(zᵢ)ˣ / x!.
    pub fn coord_pmf(&self, link: &Link, i: usize, x: u64) -> f64 {
        poisson_pmf(self.rate(link, i), x)
    }

    /// Outcomes 0..X−1 retained, with P(Poi(U) ≥ X) < 1e-12.
    pub fn truncation(&self) -> usize {
        let mut tail = 1.0;
        let mut x = 0u64;
        while tail >= TAIL_MASS {
            tail -= poisson_pmf(self.upper, x);
            x += 1;
            if tail < 1e-9 {
                // recompute directly to avoid cancellation
                tail = (x..x + 200).map(|k| poisson_pmf(self.upper, k)).sum();
            }
        }
        x as usize
    }

    /// Finite experiment over links; the last outcome carries the Poisson tail.
    pub fn to_discrete_experiment(
        &self,
        name: &str,
        links: &[Link],
        truth: usize,
    ) -> Result<DiscreteExperiment> {
        let b = self.truncation();
        let tables = (0..self.n())
            .map(|i| {
                let rows = links
                    .iter()
                    .map(|l| {
                        let mut row: Vec<f64> =
                            (0..b as u64).map(|x| self.coord_pmf(l, i, x)).collect();
                        let head: f64 =
                            crate::numeric::compensated_sum(row[..b - 1].iter().copied());
                        row[b - 1] = (1.0 - head).max(0.0);
                        row
                    })
                    .collect();
                PmfTable::new(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        DiscreteExperiment::new(name, tables, ParameterId(truth))
    }

    /// (1/n) Σ H*(Poi(θ₁(zᵢ)), Poi(θ₂(zᵢ)))².
    pub fn avg_hstar_sq(&self, l1: &Link, l2: &Link) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.n() {
            s += poisson_hstar_bound(
                self.rate(l1, i),
                self.rate(l2, i),
                self.lower,
                self.upper,
                POISSON_TRUNC,
            )?
            .value;
        }
        Ok(s / self.n() as f64)
    }

    /// ∫ (θ₁ − θ₂)² dℙₙᶻ over the empirical covariate law.
    pub fn empirical_l2_sq(&self, l1: &Link, l2: &Link) -> f64 {
        (0..self.n())
            .map(|i| (self.rate(l1, i) - self.rate(l2, i)).powi(2))
            .sum::<f64>()
            / self.n() as f64
    }

    /// C(L, U) from the Poisson H* series.
    pub fn bound_constant(&self) -> Result<f64> {
        Ok(poisson_hstar_bound(
            self.lower,
            self.lower,
            self.lower,
            self.upper,
            POISSON_TRUNC,
        )?
        .bound_constant)
    }
}

pub fn poisson_pmf(rate: f64, x: u64) -> f64 {
    let xf = x as f64;
    (-rate + xf * rate.ln() - ln_gamma(xf + 1.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> PoissonRegModel {
        PoissonRegModel::new((0..8).map(|i| i as f64 / 7.0).collect(), 1.0, 2.0).unwrap()
    }

    #[test]
    fn pmf_values() {
        assert!((poisson_pmf(1.0, 0) - 0.367879).abs() < 1e-6);
        let m = PoissonRegModel::new(vec![0.0, 5.0], 1.5, 1.5).unwrap();
        let l = Link::Constant(1.5);
        assert_eq!(m.coord_pmf(&l, 0, 3), m.coord_pmf(&l, 1, 3));
    }

    #[test]
    fn truncation_and_discrete_rows() {
        let m = model();
        let b = m.truncation();
        let tail: f64 = (b as u64..b as u64 + 100)
            .map(|k| poisson_pmf(2.0, k))
            .sum();
        assert!(tail < TAIL_MASS);
        let links = [
            Link::Logistic {
                location: 0.5,
                scale: 0.2,
            },
            Link::Logistic {
                location: 0.3,
                scale: 0.5,
            },
        ];
        let e = m.to_discrete_experiment("poisson", &links, 0).unwrap();
        assert_eq!(e.num_outcomes(), b);
        assert_eq!(e.tables().len(), 8);
    }

    #[test]
    fn hstar_bounded_by_l2() {
        let m = model();
        let c = m.bound_constant().unwrap();
        for (a, s) in [(0.2, 0.1), (0.7, 0.3), (0.5, 1.0)] {
            let l1 = Link::Logistic {
                location: a,
                scale: s,
            };
            let l2 = Link::Logistic {
                location: 0.4,
                scale: 0.25,
            };
            assert!(m.avg_hstar_sq(&l1, &l2).unwrap() <= c * m.empirical_l2_sq(&l1, &l2));
        }
    }
}

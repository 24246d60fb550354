//! Concentration neighbourhoods of the truth and their prior mass.
//!
//! | kind | membership |
//! |------|------------|
//! | `W`    | H*(p₀⁽ⁿ⁾, p_θ⁽ⁿ⁾)² ≤ (2/3)(e^{1.5nε²} − 1) |
//! | `WBar` | (1/n) Σ H*(p₀ᵢ, p_θᵢ)² ≤ ε² |
//! | `B`    | K ≤ nε² and V_{k,0} ≤ n^{k/2} ε^k |
//! | `W1`   | transition H*² + (1/n)·initial H*² ≤ ε² |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::par_map;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodKind {
    W,
    WBar,
    B,
    W1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub kind: NeighborhoodKind,
    pub epsilon: f64,
    pub n: usize,
    /// Moment order for `B`.
    pub k: u32,
}

impl NeighborhoodSpec {
    pub fn new(kind: NeighborhoodKind, epsilon: f64, n: usize) -> Result<Self> {
        Self::with_moment(kind, epsilon, n, 2)
    }

    pub fn with_moment(kind: NeighborhoodKind, epsilon: f64, n: usize, k: u32) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: epsilon,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "n",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        if kind == NeighborhoodKind::B && k < 2 {
            return Err(Error::OutOfRange {
                what: "k",
                value: k as f64,
                lo: 2.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Self {
            kind,
            epsilon,
            n,
            k,
        })
    }

    pub fn n_eps_sq(&self) -> f64 {
        self.n as f64 * self.epsilon * self.epsilon
    }

    /// Radius √((2/3)(e^{1.5nε²} − 1)) of W_n in H*.
    pub fn w_threshold(&self) -> f64 {
        (2.0 / 3.0 * (1.5 * self.n_eps_sq()).exp_m1()).sqrt()
    }
}

/// Divergences from the truth that the neighbourhoods are built from.
/// Experiments implement the parts their shape supports.
pub trait Geometry: Sync {
    type Param: Sync;

    fn shape(&self) -> &str;

    /// log(1 + (3/2) H*(p₀⁽ⁿ⁾, p_θ⁽ⁿ⁾)²), i.e. log E₀[R_θ^{−1/2}].
    fn log_inverse_root_moment(&self, _theta: &Self::Param, _n: usize) -> Result<f64> {
        Err(self.unsupported("joint H*"))
    }

    /// (1/n) Σ H*(p₀ᵢ, p_θᵢ)².
    fn mean_coord_hstar_sq(&self, _theta: &Self::Param, _n: usize) -> Result<f64> {
        Err(self.unsupported("coordinatewise H*"))
    }

    /// (K, V_{k,0}) of the n-fold laws.
    fn kl_moments(&self, _theta: &Self::Param, _n: usize, _k: u32) -> Result<(f64, f64)> {
        Err(self.unsupported("Kullback-Leibler moments"))
    }

    /// ∫ H*(p₀(·|x), p_θ(·|x))² dν(x).
    fn transition_hstar_sq(&self, _theta: &Self::Param) -> Result<f64> {
        Err(self.unsupported("transition H*"))
    }

    /// H*(q₀, q_θ)² of the initial laws.
    fn initial_hstar_sq(&self, _theta: &Self::Param) -> Result<f64> {
        Err(self.unsupported("initial H*"))
    }

    fn unsupported(&self, what: &str) -> Error {
        Error::UnsupportedKind {
            what: what.to_string(),
            by: self.shape().to_string(),
        }
    }
}

pub fn member<G: Geometry>(spec: &NeighborhoodSpec, geom: &G, theta: &G::Param) -> Result<bool> {
    let neps = spec.n_eps_sq();
    let eps2 = spec.epsilon * spec.epsilon;
    Ok(match spec.kind {
        NeighborhoodKind::W => geom.log_inverse_root_moment(theta, spec.n)? <= 1.5 * neps,
        NeighborhoodKind::WBar => geom.mean_coord_hstar_sq(theta, spec.n)? <= eps2,
        NeighborhoodKind::B => {
            let (kl, v) = geom.kl_moments(theta, spec.n, spec.k)?;
            kl <= neps
                && v <= (spec.n as f64).powf(spec.k as f64 / 2.0) * spec.epsilon.powi(spec.k as i32)
        }
        NeighborhoodKind::W1 => {
            geom.transition_hstar_sq(theta)? + geom.initial_hstar_sq(theta)? / spec.n as f64 <= eps2
        }
    })
}

/// A prior given either as finitely many weighted points or as a sampler.
pub enum PriorSource<'a, P> {
    Finite { points: &'a [P], weights: &'a [f64] },
    Sampler(&'a (dyn Fn(&mut StreamRng) -> P + Sync)),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Π(neighbourhood): exact on finite priors, Monte Carlo proportion with
/// binomial standard error on samplers (draw i uses its own derived stream).
pub fn prior_mass<G: Geometry>(
    spec: &NeighborhoodSpec,
    geom: &G,
    prior: PriorSource<'_, G::Param>,
    mc_budget: usize,
    seed: u64,
) -> Result<MassEstimate> {
    match prior {
        PriorSource::Finite { points, weights } => {
            if points.len() != weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: weights.len(),
                });
            }
            let mut mass = crate::numeric::NeumaierSum::default();
            for (p, w) in points.iter().zip(weights) {
                if *w > 0.0 && member(spec, geom, p)? {
                    mass.add(*w);
                }
            }
            Ok(MassEstimate {
                estimate: mass.value(),
                stderr: 0.0,
            })
        }
        PriorSource::Sampler(draw) => {
            if mc_budget == 0 {
                return Err(Error::BudgetZero);
            }
            let hits = par_map(mc_budget, |i| {
                let mut r = rng::stream(seed, "prior-mass", i as u64);
                let theta = draw(&mut r);
                member(spec, geom, &theta)
            });
            let mut k = 0usize;
            for h in hits {
                if h? {
                    k += 1;
                }
            }
            let b = mc_budget as f64;
            let p = k as f64 / b;
            Ok(MassEstimate {
                estimate: p,
                stderr: (p * (1.0 - p) / b).sqrt(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_threshold_value() {
        let s = NeighborhoodSpec::new(NeighborhoodKind::W, (0.1f64 / 10.0).sqrt(), 10).unwrap();
        assert!((s.w_threshold() - 0.328465).abs() < 1e-6);
    }

    #[test]
    fn spec_validation() {
        assert!(NeighborhoodSpec::new(NeighborhoodKind::W, 0.0, 10).is_err());
        assert!(NeighborhoodSpec::new(NeighborhoodKind::W, 0.1, 0).is_err());
        assert!(NeighborhoodSpec::with_moment(NeighborhoodKind::B, 0.1, 3, 1).is_err());
    }

    #[test]
    fn threshold_exceeds_root_n_eps() {
        for i in 1..2000 {
            let t = i as f64 * 0.01;
            assert!(1.5 * t < (1.5 * t).exp_m1());
        }
    }
}

mod discrete {
    use super::Geometry;
    use crate::divergences::{hellinger_star_sq, kl_and_moments, PRODUCT_STATE_LIMIT};
    use crate::error::{Error, Result};
    use crate::experiment::{DiscreteExperiment, Experiment, ParameterId};
    use crate::numeric::NeumaierSum;

    impl Geometry for DiscreteExperiment {
        type Param = ParameterId;

        fn shape(&self) -> &str {
            "product experiment"
        }

        fn log_inverse_root_moment(&self, theta: &ParameterId, n: usize) -> Result<f64> {
            let mut s = NeumaierSum::default();
            for i in 0..n {
                s.add(
                    (1.5 * hellinger_star_sq(self.pmf(*self.truth(), i), self.pmf(*theta, i))?)
                        .ln_1p(),
                );
            }
            Ok(s.value())
        }

        fn mean_coord_hstar_sq(&self, theta: &ParameterId, n: usize) -> Result<f64> {
            crate::divergences::avg_hellinger_star_sq(&self.coordinate_pairs(
                *self.truth(),
                *theta,
                n,
            ))
        }

        fn kl_moments(&self, theta: &ParameterId, n: usize, k: u32) -> Result<(f64, f64)> {
            let pairs = self.coordinate_pairs(*self.truth(), *theta, n);
            let mut kl = NeumaierSum::default();
            let mut var = NeumaierSum::default();
            for (f, g) in &pairs {
                let r = kl_and_moments(f, g, &[2])?;
                kl.add(r.kl);
                var.add(r.v_centered[&2]);
            }
            let kl = kl.value();
            if !kl.is_finite() {
                return Ok((f64::INFINITY, f64::INFINITY));
            }
            if k == 2 {
                // variances of independent log-ratios add
                return Ok((kl, var.value()));
            }
            let b = self.num_outcomes() as f64;
            if b.powi(n as i32) > PRODUCT_STATE_LIMIT as f64 {
                return Err(Error::StateSpaceTooLarge {
                    states: b.powi(n as i32),
                    limit: PRODUCT_STATE_LIMIT,
                });
            }
            let b = self.num_outcomes();
            let mut idx = vec![0usize; n];
            let mut v = NeumaierSum::default();
            loop {
                let (mut p, mut l) = (1.0, 0.0);
                for (i, (f, g)) in pairs.iter().enumerate() {
                    p *= f[idx[i]];
                    if f[idx[i]] > 0.0 {
                        l += (f[idx[i]] / g[idx[i]]).ln();
                    }
                }
                if p > 0.0 {
                    v.add(p * (l - kl).abs().powi(k as i32));
                }
                let mut j = 0;
                while j < n {
                    idx[j] += 1;
                    if idx[j] < b {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == n {
                    return Ok((kl, v.value()));
                }
            }
        }
    }
}

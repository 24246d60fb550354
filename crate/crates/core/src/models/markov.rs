//! Markov-chain experiments with p_θ⁽ⁿ⁾(x) = q_θ(x₀) ∏ p_θ(xᵢ | xᵢ₋₁).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergences::{hellinger_sq, hellinger_star_sq};
use crate::error::{Error, Result};
use crate::experiment::{draw_index, Experiment, ParameterId, SampleBatch};
use crate::neighborhoods::Geometry;
use crate::numeric::NeumaierSum;
use crate::rng;

/// Constants with a₀ r(y) ≤ p_θ(y|x) ≤ a₁ r(y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRatioBounds {
    pub a0: f64,
    pub a1: f64,
    /// Half-width of the state lattice the bounds were computed on, if truncated.
    pub lattice: Option<f64>,
}

impl DensityRatioBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0) {
            return Err(Error::BoundsCertificateInvalid(format!(
                "a0 = {} is not positive",
                self.a0
            )));
        }
        if self.a0 > self.a1 {
            return Err(Error::BoundsCertificateInvalid(format!(
                "a0 = {} exceeds a1 = {}",
                self.a0, self.a1
            )));
        }
        if self.a1 < 1.0 {
            return Err(Error::BoundsCertificateInvalid(format!(
                "a1 = {} is below 1",
                self.a1
            )));
        }
        Ok(())
    }

    /// Upper limit √a₀ / (2√a₁) on δ.
    pub fn delta_cap(&self) -> f64 {
        self.a0.sqrt() / (2.0 * self.a1.sqrt())
    }
}

pub trait MarkovModel: Sync {
    type Param;

    fn transition_logdensity(&self, theta: &Self::Param, y: f64, x: f64) -> f64;

    fn initial_logdensity(&self, theta: &Self::Param, x0: f64) -> f64;

    /// Reference density r with dν = r dμ.
    fn reference_density(&self, y: f64) -> f64;

    fn bounds(&self) -> DensityRatioBounds;
}

/// log q_θ(x₀) + Σ log p_θ(xᵢ | xᵢ₋₁).
pub fn markov_joint_loglik<M: MarkovModel>(
    m: &M,
    theta: &M::Param,
    x: &SampleBatch,
) -> Result<f64> {
    if !x.has_initial() || x.values().is_empty() {
        return Err(Error::DimensionMismatch {
            expected: x.values().len() + 1,
            got: x.values().len(),
        });
    }
    let v = x.values();
    let mut s = NeumaierSum::default();
    s.add(m.initial_logdensity(theta, v[0]));
    for w in v.windows(2) {
        s.add(m.transition_logdensity(theta, w[1], w[0]));
    }
    let s = s.value();
    Ok(if s.is_nan() { f64::NEG_INFINITY } else { s })
}

/// Chain on states {0, …, S−1} with one transition matrix and initial law per parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteMarkovChain {
    name: String,
    transitions: Vec<Vec<Vec<f64>>>,
    initials: Vec<Vec<f64>>,
    reference: Vec<f64>,
    truth: ParameterId,
}

fn check_pmf(p: &[f64], what: &str) -> Result<()> {
    let s: f64 = p.iter().sum();
    if p.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPmf(format!("{what} sums to {s}")));
    }
    Ok(())
}

impl FiniteMarkovChain {
    pub fn new(
        name: impl Into<String>,
        transitions: Vec<Vec<Vec<f64>>>,
        initials: Vec<Vec<f64>>,
        reference: Vec<f64>,
        truth: usize,
    ) -> Result<Self> {
        let s = reference.len();
        if transitions.is_empty() {
            return Err(Error::EmptyList);
        }
        if initials.len() != transitions.len() {
            return Err(Error::DimensionMismatch {
                expected: transitions.len(),
                got: initials.len(),
            });
        }
        check_pmf(&reference, "reference")?;
        for (t, (m, q)) in transitions.iter().zip(&initials).enumerate() {
            if m.len() != s || q.len() != s || m.iter().any(|r| r.len() != s) {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    got: m.len(),
                });
            }
            check_pmf(q, &format!("initial law {t}"))?;
            for (x, row) in m.iter().enumerate() {
                check_pmf(row, &format!("transition row {x} of parameter {t}"))?;
            }
        }
        if truth >= transitions.len() {
            return Err(Error::OutOfRange {
                what: "truth index",
                value: truth as f64,
                lo: 0.0,
                hi: (transitions.len() - 1) as f64,
            });
        }
        Ok(Self {
            name: name.into(),
            transitions,
            initials,
            reference,
            truth: ParameterId(truth),
        })
    }

    /// Two-state chains with flip probabilities (p₀₁, p₁₀), uniform initial
    /// law and uniform reference density.
    pub fn two_state(name: impl Into<String>, flips: &[(f64, f64)], truth: usize) -> Result<Self> {
        let transitions = flips
            .iter()
            .map(|&(a, b)| vec![vec![1.0 - a, a], vec![b, 1.0 - b]])
            .collect();
        let initials = vec![vec![0.5, 0.5]; flips.len()];
        Self::new(name, transitions, initials, vec![0.5, 0.5], truth)
    }

    pub fn num_states(&self) -> usize {
        self.reference.len()
    }

    pub fn num_params(&self) -> usize {
        self.transitions.len()
    }

    pub fn transition(&self, theta: ParameterId) -> &[Vec<f64>] {
        &self.transitions[theta.0]
    }

    pub fn initial(&self, theta: ParameterId) -> &[f64] {
        &self.initials[theta.0]
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// d(θ₁, θ₂) = (Σₓ r(x) H(p_θ₁(·|x), p_θ₂(·|x))²)^{1/2}.
    pub fn transition_hellinger(&self, a: ParameterId, b: ParameterId) -> f64 {
        let mut s = NeumaierSum::default();
        for x in 0..self.num_states() {
            s.add(
                self.reference[x]
                    * hellinger_sq(&self.transitions[a.0][x], &self.transitions[b.0][x]).unwrap(),
            );
        }
        s.value().sqrt()
    }

    /// ν-averaged H*(p_θ₁(·|x), p_θ₂(·|x))².
    pub fn transition_hellinger_star_sq(&self, a: ParameterId, b: ParameterId) -> f64 {
        let mut s = NeumaierSum::default();
        for x in 0..self.num_states() {
            s.add(
                self.reference[x]
                    * hellinger_star_sq(&self.transitions[a.0][x], &self.transitions[b.0][x])
                        .unwrap(),
            );
        }
        s.value()
    }

    fn state(&self, v: f64) -> Result<usize> {
        let s = v as usize;
        if v < 0.0 || v.fract() != 0.0 || s >= self.num_states() {
            return Err(Error::OutOfRange {
                what: "state",
                value: v,
                lo: 0.0,
                hi: (self.num_states() - 1) as f64,
            });
        }
        Ok(s)
    }
}

impl MarkovModel for FiniteMarkovChain {
    type Param = ParameterId;

    fn transition_logdensity(&self, theta: &ParameterId, y: f64, x: f64) -> f64 {
        self.transitions[theta.0][x as usize][y as usize].ln()
    }

    fn initial_logdensity(&self, theta: &ParameterId, x0: f64) -> f64 {
        self.initials[theta.0][x0 as usize].ln()
    }

    fn reference_density(&self, y: f64) -> f64 {
        self.reference[y as usize]
    }

    fn bounds(&self) -> DensityRatioBounds {
        let (mut a0, mut a1) = (f64::INFINITY, 0.0f64);
        for m in &self.transitions {
            for row in m {
                for (y, p) in row.iter().enumerate() {
                    let r = p / self.reference[y];
                    a0 = a0.min(r);
                    a1 = a1.max(r);
                }
            }
        }
        DensityRatioBounds {
            a0,
            a1,
            lattice: None,
        }
    }
}

impl Experiment for FiniteMarkovChain {
    type Param = ParameterId;

    fn name(&self) -> &str {
        &self.name
    }

    fn truth(&self) -> &ParameterId {
        &self.truth
    }

    fn log_density(&self, theta: &ParameterId, x: &SampleBatch) -> Result<f64> {
        for &v in x.values() {
            self.state(v)?;
        }
        markov_joint_loglik(self, theta, x)
    }

    fn sample(&self, theta: &ParameterId, n: usize, seed: u64) -> Result<SampleBatch> {
        let mut r = rng::stream(seed, "markov-sample", 0);
        let mut v = Vec::with_capacity(n + 1);
        let mut s = draw_index(&self.initials[theta.0], r.random::<f64>());
        v.push(s as f64);
        for _ in 0..n {
            s = draw_index(&self.transitions[theta.0][s], r.random::<f64>());
            v.push(s as f64);
        }
        Ok(SampleBatch::with_initial(v))
    }
}

impl Geometry for FiniteMarkovChain {
    type Param = ParameterId;

    fn shape(&self) -> &str {
        "Markov chain"
    }

    /// log E₀[R_θ^{−1/2}] by forward recursion over the transition kernel
    /// M(x, y) = p₀(y|x) √(p₀(y|x) / p_θ(y|x)).
    fn log_inverse_root_moment(&self, theta: &ParameterId, n: usize) -> Result<f64> {
        let s = self.num_states();
        let (q0, qt) = (self.initial(self.truth), self.initial(*theta));
        let weight = |f: f64, g: f64| {
            if f == 0.0 {
                0.0
            } else if g == 0.0 {
                f64::INFINITY
            } else {
                f * (f / g).sqrt()
            }
        };
        let mut v: Vec<f64> = (0..s).map(|x| weight(q0[x], qt[x])).collect();
        let mut log_scale = 0.0;
        let (m0, mt) = (self.transition(self.truth), self.transition(*theta));
        for _ in 0..n {
            let mut next = vec![0.0; s];
            for x in 0..s {
                if v[x] == 0.0 {
                    continue;
                }
                for y in 0..s {
                    next[y] += v[x] * weight(m0[x][y], mt[x][y]);
                }
            }
            let z: f64 = next.iter().sum();
            if !z.is_finite() {
                return Ok(f64::INFINITY);
            }
            log_scale += z.ln();
            v = next.into_iter().map(|a| a / z).collect();
        }
        let z: f64 = v.iter().sum();
        Ok(log_scale + z.ln())
    }

    fn transition_hstar_sq(&self, theta: &ParameterId) -> Result<f64> {
        Ok(self.transition_hellinger_star_sq(self.truth, *theta))
    }

    fn initial_hstar_sq(&self, theta: &ParameterId) -> Result<f64> {
        hellinger_star_sq(self.initial(self.truth), self.initial(*theta))
    }
}

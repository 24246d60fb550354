//! Infinite-dimensional normal model: X⁽ⁿ⁾ ~ N(θ₍ₙ₎, Σ₍ₙ₎) with θ₍ₙ₎ the first n
//! coordinates of a square-summable sequence.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::experiment::{Experiment, SampleBatch};
use crate::neighborhoods::Geometry;
use crate::rng;

/// Σ₍ₙ₎⁻¹, stored in the cheapest exact form.
#[derive(Debug, Clone, PartialEq)]
pub enum Precision {
    ScaledIdentity(f64),
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct GaussSeqModel {
    n: usize,
    gamma: f64,
    precision: Precision,
    /// Lower Cholesky factor of a dense precision.
    chol: Option<DMatrix<f64>>,
    theta0: Arc<Vec<f64>>,
}

/// θ₀ᵢ = i^{−(γ+1)}, i = 1..len; Σ θ₀ᵢ² i^{2γ} = Σ i^{−2} is finite.
pub fn power_decay_truth(len: usize, gamma: f64) -> Vec<f64> {
    (1..=len).map(|i| (i as f64).powf(-(gamma + 1.0))).collect()
}

impl GaussSeqModel {
    pub fn new(n: usize, gamma: f64, precision: Precision, theta0: Arc<Vec<f64>>) -> Result<Self> {
        if n == 0 || theta0.len() < n {
            return Err(Error::DimensionMismatch {
                expected: n.max(1),
                got: theta0.len(),
            });
        }
        if !(gamma > 0.0) {
            return Err(Error::OutOfRange {
                what: "gamma",
                value: gamma,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let chol = match &precision {
            Precision::ScaledIdentity(s) if *s > 0.0 => None,
            Precision::Diagonal(d) if d.len() == n && d.iter().all(|v| *v > 0.0) => None,
            Precision::Dense(m) if m.nrows() == n && m.ncols() == n => {
                if (m - m.transpose()).amax() > 1e-12 * m.amax() {
                    return Err(Error::NotPositiveDefinite);
                }
                Some(m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l())
            }
            _ => return Err(Error::NotPositiveDefinite),
        };
        Ok(Self {
            n,
            gamma,
            precision,
            chol,
            theta0,
        })
    }

    /// Independent coordinates N(θᵢ, 1/n).
    pub fn independent(n: usize, gamma: f64, theta0: Arc<Vec<f64>>) -> Result<Self> {
        Self::new(n, gamma, Precision::ScaledIdentity(n as f64), theta0)
    }

    /// Σ₍ₙ₎⁻¹ = n·T with T tridiagonal (1 on the diagonal, ρ off it), |ρ| < 1/2;
    /// the eigenvalues of T lie in (1 − 2|ρ|, 1 + 2|ρ|).
    pub fn tridiagonal(n: usize, gamma: f64, theta0: Arc<Vec<f64>>, rho: f64) -> Result<Self> {
        if rho.abs() >= 0.5 {
            return Err(Error::OutOfRange {
                what: "rho",
                value: rho,
                lo: -0.5,
                hi: 0.5,
            });
        }
        let nf = n as f64;
        let m = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => nf,
            1 => nf * rho,
            _ => 0.0,
        });
        Self::new(n, gamma, Precision::Dense(m), theta0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn precision(&self) -> &Precision {
        &self.precision
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    /// Diagonal of Σ₍ₙ₎⁻¹ when it is diagonal.
    pub fn diagonal_precision(&self) -> Option<Vec<f64>> {
        match &self.precision {
            Precision::ScaledIdentity(s) => Some(vec![*s; self.n]),
            Precision::Diagonal(d) => Some(d.clone()),
            Precision::Dense(_) => None,
        }
    }

    pub fn dense_precision(&self) -> DMatrix<f64> {
        match &self.precision {
            Precision::ScaledIdentity(s) => DMatrix::from_diagonal_element(self.n, self.n, *s),
            Precision::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            Precision::Dense(m) => m.clone(),
        }
    }

    /// vΣ⁻¹vᵀ for a vector of length n.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        match &self.precision {
            Precision::ScaledIdentity(s) => s * v.iter().map(|x| x * x).sum::<f64>(),
            Precision::Diagonal(d) => v.iter().zip(d).map(|(x, p)| p * x * x).sum(),
            Precision::Dense(m) => {
                let v = DVector::from_column_slice(v);
                (v.transpose() * m * &v)[(0, 0)]
            }
        }
    }

    fn log_det_precision(&self) -> f64 {
        match &self.precision {
            Precision::ScaledIdentity(s) => self.n as f64 * s.ln(),
            Precision::Diagonal(d) => d.iter().map(|p| p.ln()).sum(),
            Precision::Dense(_) => {
                let l = self.chol.as_ref().unwrap();
                2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>()
            }
        }
    }

    fn head(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| theta.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    /// Multivariate normal log-density of x at mean θ₍ₙ₎ (θ padded with zeros).
    pub fn loglik(&self, theta: &[f64], x: &SampleBatch) -> Result<f64> {
        x.check_len(self.n)?;
        let th = self.head(theta);
        let r: Vec<f64> = x.values().iter().zip(&th).map(|(a, b)| a - b).collect();
        let nf = self.n as f64;
        Ok(-0.5 * self.quad_form(&r) + 0.5 * self.log_det_precision()
            - 0.5 * nf * (2.0 * std::f64::consts::PI).ln())
    }

    /// Ratio αΣ⁻¹αᵀ / (n Σ αᵢ²), bounded above and below under condition (a).
    pub fn condition_a_ratio(&self, alpha: &[f64]) -> f64 {
        self.quad_form(alpha) / (self.n as f64 * alpha.iter().map(|a| a * a).sum::<f64>())
    }

    /// Σ θ₀ᵢ² i^{2γ} over the stored truth.
    pub fn condition_b_sum(&self) -> f64 {
        self.theta0
            .iter()
            .enumerate()
            .map(|(i, t)| t * t * ((i + 1) as f64).powf(2.0 * self.gamma))
            .sum()
    }

    /// ℓ₂ distance from θ (padded with zeros) to the full stored truth.
    pub fn distance_to_truth(&self, theta: &[f64]) -> f64 {
        self.theta0
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let d = theta.get(i).copied().unwrap_or(0.0) - t;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn delta(&self, theta: &[f64]) -> Vec<f64> {
        self.head(theta)
            .iter()
            .zip(self.theta0.iter())
            .map(|(a, b)| a - b)
            .collect()
    }
}

impl Experiment for GaussSeqModel {
    type Param = Vec<f64>;

    fn name(&self) -> &str {
        "gauss-seq"
    }

    fn truth(&self) -> &Vec<f64> {
        &self.theta0
    }

    fn log_density(&self, theta: &Vec<f64>, x: &SampleBatch) -> Result<f64> {
        self.loglik(theta, x)
    }

    fn sample(&self, theta: &Vec<f64>, n: usize, seed: u64) -> Result<SampleBatch> {
        if n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: n,
            });
        }
        let mut r = rng::stream(seed, "gauss-seq-sample", 0);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        let th = self.head(theta);
        let noise: Vec<f64> = match &self.precision {
            Precision::ScaledIdentity(s) => z.iter().map(|v| v / s.sqrt()).collect(),
            Precision::Diagonal(d) => z.iter().zip(d).map(|(v, p)| v / p.sqrt()).collect(),
            Precision::Dense(_) => {
                // Σ⁻¹ = LLᵀ, so L⁻ᵀz has covariance Σ
                let l = self.chol.as_ref().unwrap();
                let w = l
                    .transpose()
                    .solve_upper_triangular(&DVector::from_vec(z))
                    .ok_or(Error::NotPositiveDefinite)?;
                w.iter().copied().collect()
            }
        };
        Ok(SampleBatch::new(
            th.iter().zip(noise).map(|(a, b)| a + b).collect(),
        ))
    }
}

impl Geometry for GaussSeqModel {
    type Param = Vec<f64>;

    fn shape(&self) -> &str {
        "Gaussian sequence model"
    }

    /// log(1 + 1.5 H*²) = 3q/8.
    fn log_inverse_root_moment(&self, theta: &Vec<f64>, _n: usize) -> Result<f64> {
        Ok(3.0 * self.quad_form(&self.delta(theta)) / 8.0)
    }

    fn mean_coord_hstar_sq(&self, theta: &Vec<f64>, _n: usize) -> Result<f64> {
        let d = self
            .diagonal_precision()
            .ok_or_else(|| self.unsupported("coordinatewise H* with correlated noise"))?;
        let delta = self.delta(theta);
        Ok(delta
            .iter()
            .zip(&d)
            .map(|(x, p)| 2.0 / 3.0 * (3.0 * p * x * x / 8.0).exp_m1())
            .sum::<f64>()
            / self.n as f64)
    }

    /// K = q/2 and V_{k,0} = E|N(0, q)|^k.
    fn kl_moments(&self, theta: &Vec<f64>, _n: usize, k: u32) -> Result<(f64, f64)> {
        let q = self.quad_form(&self.delta(theta));
        let kf = k as f64;
        let abs_moment = (kf / 2.0 * (2.0 * q).ln() + ln_gamma((kf + 1.0) / 2.0)).exp()
            / std::f64::consts::PI.sqrt();
        Ok((q / 2.0, if q == 0.0 { 0.0 } else { abs_moment }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_loglik_value() {
        let m = GaussSeqModel::new(
            2,
            1.0,
            Precision::Diagonal(vec![4.0, 4.0]),
            Arc::new(vec![0.0, 0.0]),
        )
        .unwrap();
        let x = SampleBatch::new(vec![0.5, -0.5]);
        let l = m.loglik(&[0.0, 0.0], &x).unwrap();
        assert!((l - (-1.451583)).abs() < 1e-6);
        let one = GaussSeqModel::new(1, 1.0, Precision::ScaledIdentity(1.0), Arc::new(vec![0.0]))
            .unwrap();
        let l = one.loglik(&[0.0], &SampleBatch::new(vec![0.3])).unwrap();
        assert!((l - crate::numeric::log_phi(0.3)).abs() < 1e-15);
    }

    #[test]
    fn dense_and_diagonal_agree_without_correlation() {
        let th = Arc::new(power_decay_truth(5, 1.0));
        let a = GaussSeqModel::independent(5, 1.0, th.clone()).unwrap();
        let b = GaussSeqModel::tridiagonal(5, 1.0, th, 0.0).unwrap();
        let x = a.sample_truth(5, 1).unwrap();
        let t = vec![0.1, 0.2, -0.1, 0.0, 0.3];
        assert!((a.loglik(&t, &x).unwrap() - b.loglik(&t, &x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tridiagonal_condition_a_and_sampling_covariance() {
        let th = Arc::new(power_decay_truth(3, 1.0));
        let m = GaussSeqModel::tridiagonal(3, 1.0, th, 0.3).unwrap();
        for v in [[1.0, 0.0, 0.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0]] {
            let r = m.condition_a_ratio(&v);
            assert!(r > 0.4 - 1e-12 && r < 1.6 + 1e-12);
        }
        // empirical covariance of X₁, X₂ against Σ = (3T)⁻¹
        let reps = 20_000;
        let mut c = [0.0; 2];
        for s in 0..reps {
            let x = m.sample_truth(3, s).unwrap();
            let d: Vec<f64> = x
                .values()
                .iter()
                .zip(m.theta0())
                .map(|(a, b)| a - b)
                .collect();
            c[0] += d[0] * d[0];
            c[1] += d[0] * d[1];
        }
        let sigma = m.dense_precision().try_inverse().unwrap();
        assert!((c[0] / reps as f64 - sigma[(0, 0)]).abs() < 0.02 * sigma[(0, 0)] + 0.005);
        assert!((c[1] / reps as f64 - sigma[(0, 1)]).abs() < 0.01);
        assert!(GaussSeqModel::tridiagonal(3, 1.0, Arc::new(vec![0.0; 3]), 0.5).is_err());
    }

    #[test]
    fn geometry_matches_closed_forms() {
        let m = GaussSeqModel::independent(4, 1.0, Arc::new(vec![0.0; 4])).unwrap();
        let th = vec![0.5, 0.0, 0.0, 0.0];
        let q = 4.0 * 0.25;
        assert!((m.log_inverse_root_moment(&th, 4).unwrap() - 3.0 * q / 8.0).abs() < 1e-15);
        let (kl, v2) = m.kl_moments(&th, 4, 2).unwrap();
        assert!((kl - 0.5).abs() < 1e-15 && (v2 - q).abs() < 1e-12);
        assert!((m.condition_b_sum()).abs() < 1e-15);
        assert_eq!(m.distance_to_truth(&th), 0.5);
    }
}

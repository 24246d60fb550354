//! Posteriors, pseudoposteriors and evidence.
//!
//! Finite priors are handled exactly in log space. Continuous priors use
//! self-normalised importance sampling with the prior as proposal, or the
//! conjugate Gaussian form for the sequence model.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{Experiment, SampleBatch};
use crate::models::GaussSeqModel;
use crate::numeric::{compensated_sum, log_mean_exp, log_sum_exp, par_map, quantile};
use crate::priors::PriorSpec;
use crate::rng::{self, StreamRng};

/// Minimum effective sample size accepted from importance sampling.
pub const MIN_ESS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorResult<P> {
    pub support: Vec<P>,
    /// Normalised log posterior masses.
    pub log_weights: Vec<f64>,
    /// log ∫ R_θ^β dΠ.
    pub log_evidence: f64,
    /// (Σw)²/Σw² of the normalised weights.
    pub ess: f64,
}

impl<P> PosteriorResult<P> {
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.weights())
    }
}

fn ess_of(log_weights: &[f64]) -> f64 {
    let s2 = compensated_sum(log_weights.iter().map(|l| (2.0 * l).exp()));
    1.0 / s2
}

/// Posterior from prior weights and log-ratios, with likelihood power β.
pub fn posterior_from_log_ratios<P>(
    support: Vec<P>,
    prior_weights: &[f64],
    log_ratios: &[f64],
    beta: f64,
) -> Result<PosteriorResult<P>> {
    if support.len() != prior_weights.len() || support.len() != log_ratios.len() {
        return Err(Error::DimensionMismatch {
            expected: support.len(),
            got: prior_weights.len().min(log_ratios.len()),
        });
    }
    if support.is_empty() {
        return Err(Error::EmptyList);
    }
    let terms: Vec<f64> = prior_weights
        .iter()
        .zip(log_ratios)
        .map(|(w, l)| {
            if *w > 0.0 && *l > f64::NEG_INFINITY {
                w.ln() + beta * l
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let log_evidence = log_sum_exp(&terms);
    if log_evidence == f64::NEG_INFINITY {
        return Err(Error::AllZeroLikelihood);
    }
    let log_weights: Vec<f64> = terms.iter().map(|t| t - log_evidence).collect();
    let ess = ess_of(&log_weights);
    Ok(PosteriorResult {
        support,
        log_weights,
        log_evidence,
        ess,
    })
}

/// Π(B | X) ∝ ∫_B R_θ dΠ over a finite prior.
pub fn posterior_exact<E: Experiment>(
    exp: &E,
    points: &[E::Param],
    prior_weights: &[f64],
    x: &SampleBatch,
) -> Result<PosteriorResult<E::Param>> {
    pseudoposterior_exact(exp, points, prior_weights, x, 1.0)
}

/// Π_β(B | X) ∝ ∫_B R_θ^β dΠ; β = 1 is the ordinary posterior.
pub fn pseudoposterior_exact<E: Experiment>(
    exp: &E,
    points: &[E::Param],
    prior_weights: &[f64],
    x: &SampleBatch,
    beta: f64,
) -> Result<PosteriorResult<E::Param>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::OutOfRange {
            what: "beta",
            value: beta,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let lr = points
        .iter()
        .map(|p| exp.log_likelihood_ratio(p, x))
        .collect::<Result<Vec<_>>>()?;
    posterior_from_log_ratios(points.to_vec(), prior_weights, &lr, beta)
}

/// Self-normalised importance sampling with the prior as proposal; draw i
/// comes from stream (seed, "importance", i).
pub fn posterior_importance<E: Experiment>(
    exp: &E,
    draw: &(dyn Fn(&mut StreamRng) -> E::Param + Sync),
    x: &SampleBatch,
    budget: usize,
    seed: u64,
) -> Result<PosteriorResult<E::Param>> {
    if budget < 100 {
        return Err(Error::Precondition(format!(
            "importance budget {budget} is below 100"
        )));
    }
    let out = par_map(budget, |i| {
        let theta = draw(&mut rng::stream(seed, "importance", i as u64));
        let lr = exp.log_likelihood_ratio(&theta, x);
        lr.map(|l| (theta, l))
    });
    let mut support = Vec::with_capacity(budget);
    let mut lr = Vec::with_capacity(budget);
    for o in out {
        let (t, l) = o?;
        support.push(t);
        lr.push(l);
    }
    let log_evidence = log_mean_exp(&lr);
    if log_evidence == f64::NEG_INFINITY {
        return Err(Error::AllZeroLikelihood);
    }
    let norm = log_sum_exp(&lr);
    let log_weights: Vec<f64> = lr.iter().map(|l| l - norm).collect();
    let ess = ess_of(&log_weights);
    if ess < MIN_ESS {
        return Err(Error::DegenerateEss {
            ess,
            at: Some(x.n()),
        });
    }
    Ok(PosteriorResult {
        support,
        log_weights,
        log_evidence,
        ess,
    })
}

/// Π(θ: d(θ, θ₀) ≥ radius | X).
pub fn posterior_tail_mass<P>(
    post: &PosteriorResult<P>,
    d_to_truth: impl Fn(&P) -> f64,
    radius: f64,
) -> f64 {
    compensated_sum(
        post.support
            .iter()
            .zip(&post.log_weights)
            .filter(|(p, _)| d_to_truth(p) >= radius)
            .map(|(_, l)| l.exp()),
    )
}

/// Tail mass with its delta-method standard error (meaningful for SNIS output).
pub fn posterior_tail_mass_stderr<P>(
    post: &PosteriorResult<P>,
    d_to_truth: impl Fn(&P) -> f64,
    radius: f64,
) -> (f64, f64) {
    let hits: Vec<bool> = post
        .support
        .iter()
        .map(|p| d_to_truth(p) >= radius)
        .collect();
    let m = compensated_sum(
        hits.iter()
            .zip(&post.log_weights)
            .filter(|(h, _)| **h)
            .map(|(_, l)| l.exp()),
    );
    let v = compensated_sum(hits.iter().zip(&post.log_weights).map(|(h, l)| {
        let r = if *h { 1.0 - m } else { -m };
        (2.0 * l).exp() * r * r
    }));
    (m, v.sqrt())
}

/// Exact Gaussian posterior for θ₍ₖ₎ in the sequence model (θₗ = 0 for l > k).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    /// Posterior precisions when the posterior is diagonal.
    pub diagonal_precision: Option<Vec<f64>>,
    /// Lower Cholesky factor of the posterior precision otherwise.
    pub precision_chol: Option<DMatrix<f64>>,
}

/// Precision = (Σ₍ₙ₎⁻¹)ₖₖ + Σₖ⁻¹, mean = precision⁻¹ (Σ₍ₙ₎⁻¹ x)ₖ.
pub fn gauss_seq_posterior_exact(
    model: &GaussSeqModel,
    prior: &PriorSpec,
    x: &SampleBatch,
) -> Result<GaussianPosterior> {
    let PriorSpec::GaussSeq { variances } = prior else {
        return Err(Error::UnsupportedKind {
            what: "conjugate posterior".into(),
            by: prior.kind().into(),
        });
    };
    x.check_len(model.n())?;
    let k = variances.len();
    if k > model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: k,
        });
    }
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    if let Some(d) = model.diagonal_precision() {
        let prec: Vec<f64> = (0..k).map(|i| d[i] + 1.0 / variances[i]).collect();
        let mean = (0..k).map(|i| d[i] * x.values()[i] / prec[i]).collect();
        return Ok(GaussianPosterior {
            mean,
            diagonal_precision: Some(prec),
            precision_chol: None,
        });
    }
    let p = model.dense_precision();
    let mut post = p.view((0, 0), (k, k)).into_owned();
    for i in 0..k {
        post[(i, i)] += 1.0 / variances[i];
    }
    let px = &p * DVector::from_column_slice(x.values());
    let rhs = DVector::from_iterator(k, px.iter().take(k).copied());
    let chol = post.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let mean = chol.solve(&rhs);
    Ok(GaussianPosterior {
        mean: mean.iter().copied().collect(),
        diagonal_precision: None,
        precision_chol: Some(chol.l()),
    })
}

impl GaussianPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `count` exact draws; draw i uses stream (seed, "gauss-posterior", i).
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        par_map(count, |i| {
            let mut r = rng::stream(seed, "gauss-posterior", i as u64);
            let z: Vec<f64> = (0..self.dim())
                .map(|_| StandardNormal.sample(&mut r))
                .collect();
            match (&self.diagonal_precision, &self.precision_chol) {
                (Some(p), _) => self
                    .mean
                    .iter()
                    .zip(z)
                    .zip(p)
                    .map(|((m, z), p)| m + z / p.sqrt())
                    .collect(),
                (None, Some(l)) => {
                    let w = l
                        .transpose()
                        .solve_upper_triangular(&DVector::from_vec(z))
                        .expect("Cholesky factor is invertible");
                    self.mean.iter().zip(w.iter()).map(|(m, w)| m + w).collect()
                }
                _ => unreachable!("posterior carries a precision"),
            }
        })
    }

    /// q-quantile of ‖θ − θ₀‖₂ over `count` posterior draws; coordinates
    /// beyond k contribute the fixed truth tail.
    pub fn radius_quantile(&self, theta0: &[f64], q: f64, count: usize, seed: u64) -> f64 {
        let radii = self.radii(theta0, count, seed);
        quantile(&radii, q)
    }

    pub fn radii(&self, theta0: &[f64], count: usize, seed: u64) -> Vec<f64> {
        let k = self.dim();
        let tail: f64 = compensated_sum(theta0.iter().skip(k).map(|t| t * t));
        self.sample(count, seed)
            .iter()
            .map(|s| {
                let head: f64 = s.iter().zip(theta0).map(|(a, b)| (a - b) * (a - b)).sum();
                (head + tail).sqrt()
            })
            .collect()
    }
}

/// Importance-weighted posterior of a single coordinate block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPosterior {
    pub draws: Vec<f64>,
    pub log_weights: Vec<f64>,
    pub ess: f64,
}

/// Weights prior draws of one block by that block's log-likelihood factor.
/// Valid when the likelihood and prior both factorise over blocks.
pub fn block_importance(draws: Vec<f64>, loglik: impl Fn(f64) -> f64) -> Result<BlockPosterior> {
    if draws.is_empty() {
        return Err(Error::EmptyList);
    }
    let ll: Vec<f64> = draws.iter().map(|b| loglik(*b)).collect();
    let norm = log_sum_exp(&ll);
    if norm == f64::NEG_INFINITY {
        return Err(Error::AllZeroLikelihood);
    }
    let log_weights: Vec<f64> = ll.iter().map(|l| l - norm).collect();
    let ess = ess_of(&log_weights);
    if ess < MIN_ESS {
        return Err(Error::DegenerateEss { ess, at: None });
    }
    Ok(BlockPosterior {
        draws,
        log_weights,
        ess,
    })
}

/// Bracket for P(Σₖ gₖ(βₖ) ≥ τ) with independent βₖ ~ block posteriors
/// and gₖ ≥ 0, by convolution of binned cost distributions on [0, τ].
/// Rounding each cost down gives the lower end, rounding up the upper end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBracket {
    pub lower: f64,
    pub upper: f64,
}

impl TailBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

pub fn separable_tail_probability(
    blocks: &[BlockPosterior],
    costs: &[&dyn Fn(f64) -> f64],
    threshold: f64,
    bins: usize,
) -> Result<TailBracket> {
    if blocks.len() != costs.len() {
        return Err(Error::DimensionMismatch {
            expected: blocks.len(),
            got: costs.len(),
        });
    }
    if threshold <= 0.0 {
        return Ok(TailBracket {
            lower: 1.0,
            upper: 1.0,
        });
    }
    let g = bins.max(1);
    let width = threshold / g as f64;
    let run = |round_up: bool| {
        // dist[j] = P(binned partial sum = j), dist[g] = P(partial sum ≥ τ)
        let mut dist = vec![0.0; g + 1];
        dist[0] = 1.0;
        for (b, cost) in blocks.iter().zip(costs) {
            let mut hist = vec![0.0; g + 1];
            for (x, l) in b.draws.iter().zip(&b.log_weights) {
                let c = cost(*x).max(0.0) / width;
                let idx = if round_up { c.ceil() } else { c.floor() };
                hist[(idx.min(g as f64)) as usize] += l.exp();
            }
            let support: Vec<(usize, f64)> = hist
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, p)| *p > 0.0)
                .collect();
            let mut next = vec![0.0; g + 1];
            next[g] = dist[g];
            for (i, &d) in dist[..g].iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for &(j, p) in &support {
                    next[(i + j).min(g)] += d * p;
                }
            }
            dist = next;
        }
        dist[g].clamp(0.0, 1.0)
    };
    Ok(TailBracket {
        lower: run(false),
        upper: run(true),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_posterior() {
        let lr = [0.0, 2f64.ln(), 4f64.ln()];
        let p = posterior_from_log_ratios(vec![0, 1, 2], &[0.2, 0.3, 0.5], &lr, 1.0).unwrap();
        let w = p.weights();
        for (a, b) in w.iter().zip([0.0714286, 0.2142857, 0.7142857]) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!((p.log_evidence - (0.2f64 + 0.6 + 2.0).ln()).abs() < 1e-14);
        let tail = posterior_tail_mass(&p, |i| *i as f64, 1.0);
        assert!((tail - 0.9285714).abs() < 1e-7);
        assert_eq!(posterior_tail_mass(&p, |i| *i as f64, 0.0), p.total_mass());
        assert_eq!(posterior_tail_mass(&p, |i| *i as f64, 3.0), 0.0);
        // ∝ (0.2·1, 0.3·√2, 0.5·2)
        let q = posterior_from_log_ratios(vec![0, 1, 2], &[0.2, 0.3, 0.5], &lr, 0.5).unwrap();
        for (a, b) in q.weights().iter().zip([0.1231327, 0.2612039, 0.6156634]) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn degenerate_cases() {
        let p = posterior_from_log_ratios(vec![7], &[1.0], &[-3.0], 1.0).unwrap();
        assert_eq!(p.weights(), vec![1.0]);
        assert_eq!(p.log_evidence, -3.0);
        let e = posterior_from_log_ratios(vec![0, 1], &[0.5, 0.5], &[f64::NEG_INFINITY; 2], 1.0);
        assert_eq!(e, Err(Error::AllZeroLikelihood));
        let s = posterior_from_log_ratios(vec![0, 1], &[0.5, 0.5], &[0.3, 0.3], 1.0).unwrap();
        assert_eq!(s.weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn conjugate_diagonal_formula() {
        use crate::models::GaussSeqModel;
        use std::sync::Arc;
        let n = 9;
        let m = GaussSeqModel::independent(n, 1.0, Arc::new(vec![0.0; n])).unwrap();
        let prior = PriorSpec::GaussSeq {
            variances: vec![0.4],
        };
        let x = SampleBatch::new((0..n).map(|i| 0.1 * i as f64 + 0.7).collect());
        let post = gauss_seq_posterior_exact(&m, &prior, &x).unwrap();
        let nv = n as f64 * 0.4;
        assert!((post.mean[0] - 0.7 * nv / (nv + 1.0)).abs() < 1e-15);
        let flat = PriorSpec::GaussSeq {
            variances: vec![1e12],
        };
        let post = gauss_seq_posterior_exact(&m, &flat, &x).unwrap();
        assert!((post.mean[0] - 0.7).abs() < 1e-10);
    }

    #[test]
    fn separable_tail_brackets_enclose_direct_enumeration() {
        let a = block_importance((0..50).map(|i| i as f64 / 10.0).collect(), |b| {
            -0.5 * (b - 2.0) * (b - 2.0)
        })
        .unwrap();
        let b = block_importance((0..40).map(|i| i as f64 / 8.0).collect(), |b| {
            -(b - 1.0).abs()
        })
        .unwrap();
        let g1 = |x: f64| x * x;
        let g2 = |x: f64| 0.5 * x;
        let tau = 6.0;
        let mut exact = 0.0;
        for (x, lx) in a.draws.iter().zip(&a.log_weights) {
            for (y, ly) in b.draws.iter().zip(&b.log_weights) {
                if g1(*x) + g2(*y) >= tau {
                    exact += (lx + ly).exp();
                }
            }
        }
        let br = separable_tail_probability(&[a, b], &[&g1, &g2], tau, 600).unwrap();
        assert!(
            br.lower <= exact + 1e-12 && exact <= br.upper + 1e-12,
            "{br:?} {exact}"
        );
        assert!(br.upper - br.lower < 0.05);
    }
}

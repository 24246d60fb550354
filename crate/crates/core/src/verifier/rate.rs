//! Contraction-rate measurements over a grid of sample sizes.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::experiment::{DiscreteExperiment, Experiment, ParameterId};
use crate::models::autoregression::{cell_edges, CellStats, SmoothFn};
use crate::models::{ar_design, ArModel, GaussSeqModel, RegressionFn};
use crate::numeric::{median, par_map, quantile, Quadrature};
use crate::posterior::{
    block_importance, gauss_seq_posterior_exact, posterior_exact, posterior_tail_mass,
    pseudoposterior_exact, separable_tail_probability,
};
use crate::priors::PriorSpec;
use crate::rng;

/// Ordinary least squares line with a two-sided Student-t band on the slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

pub fn fit_slope(x: &[f64], y: &[f64], level: f64) -> Result<SlopeFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let m = x.len();
    if m < 2 {
        return Err(Error::Precondition(
            "a slope needs at least two points".into(),
        ));
    }
    let mf = m as f64;
    let mx = x.iter().sum::<f64>() / mf;
    let my = y.iter().sum::<f64>() / mf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Precondition("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (stderr, half) = if m > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        let se = (rss / (mf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, mf - 2.0)
            .map_err(|e| Error::Precondition(e.to_string()))?
            .inverse_cdf(0.5 + 0.5 * level);
        (se, t * se)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        stderr,
        lower: slope - half,
        upper: slope + half,
        level,
    })
}

/// Bookkeeping constants of a rate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheckConfig {
    /// Radius multiplier r in r·εₙ.
    pub r: f64,
    pub replicates: usize,
    pub mc_budget: usize,
    pub constants: BTreeMap<String, f64>,
}

/// Whether tail masses fall like e^{−b nεₙ²} for some b > 0: strictly
/// decreasing, with a negative least-squares slope of log mass on nεₙ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayTrend {
    pub strictly_decreasing: bool,
    pub fitted_b: Option<f64>,
    pub consistent: bool,
}

pub fn decay_trend(n_eps_sq: &[f64], tail_mass: &[f64]) -> DecayTrend {
    let strictly_decreasing = tail_mass.windows(2).all(|w| w[1] < w[0]);
    let pts: Vec<(f64, f64)> = n_eps_sq
        .iter()
        .zip(tail_mass)
        .filter(|(_, t)| **t > 0.0)
        .map(|(a, t)| (*a, t.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fitted_b = fit_slope(&xs, &ys, 0.95).ok().map(|f| -f.slope);
    let all_zero = tail_mass.iter().all(|t| *t == 0.0);
    DecayTrend {
        strictly_decreasing,
        fitted_b,
        consistent: all_zero || (strictly_decreasing && fitted_b.is_some_and(|b| b > 0.0)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub label: String,
    pub n_grid: Vec<usize>,
    pub epsilon_n: Vec<f64>,
    /// Median over replicates of Π(d ≥ r·εₙ | X).
    pub tail_mass: Vec<f64>,
    /// Median over replicates of the posterior radius quantile; empty when not measured.
    pub q_radius: Vec<f64>,
    pub slope_fit: Option<SlopeFit>,
    /// Theoretical exponent of εₙ in n.
    pub predicted: f64,
    pub decay: DecayTrend,
    pub config: RateCheckConfig,
}

impl RateCurve {
    pub fn is_valid(&self) -> bool {
        let m = self.n_grid.len();
        self.n_grid.windows(2).all(|w| w[0] < w[1])
            && self.epsilon_n.len() == m
            && self.tail_mass.len() == m
            && (self.q_radius.is_empty() || self.q_radius.len() == m)
            && self.tail_mass.iter().all(|t| (0.0..=1.0).contains(t))
    }
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::EmptyList);
    }
    if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "n grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Gaussian sequence model with Σ₍ₙ₎ = I/n, truth θ₀ᵢ = i^{−(γ+1)} and the
/// conjugate prior with k = ⌊c·n^{1/(2γ+1)}⌋.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussSeqCurveConfig {
    pub gamma: f64,
    pub c: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Posterior draws per replicate.
    pub draws: usize,
    pub quantile: f64,
    pub r: f64,
}

impl Default for GaussSeqCurveConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            c: 1.0,
            n_grid: vec![1 << 6, 1 << 8, 1 << 10, 1 << 12, 1 << 14],
            replicates: 20,
            draws: 400,
            quantile: 0.9,
            r: 2.0,
        }
    }
}

pub fn gauss_seq_curve(cfg: &GaussSeqCurveConfig, seed: u64) -> Result<RateCurve> {
    check_grid(&cfg.n_grid)?;
    if cfg.replicates == 0 || cfg.draws == 0 {
        return Err(Error::BudgetZero);
    }
    let g = cfg.gamma;
    let mut eps = Vec::new();
    let mut tails = Vec::new();
    let mut radii = Vec::new();
    for &n in &cfg.n_grid {
        let nf = n as f64;
        let en = nf.powf(-g / (2.0 * g + 1.0));
        let k = ((cfg.c * nf.powf(1.0 / (2.0 * g + 1.0))).floor() as usize).clamp(1, n);
        let theta0 = Arc::new(crate::models::gauss_seq::power_decay_truth(n, g));
        let model = GaussSeqModel::independent(n, g, theta0.clone())?;
        let prior = PriorSpec::gauss_seq(k, g)?;
        let per_rep = par_map(cfg.replicates, |rep| -> Result<(f64, f64)> {
            let s = rng::derive_seed(seed, "gauss-seq-replicate", ((n as u64) << 16) | rep as u64);
            let x = model.sample_truth(n, s)?;
            let post = gauss_seq_posterior_exact(&model, &prior, &x)?;
            let rr = post.radii(
                &theta0,
                cfg.draws,
                rng::derive_seed(s, "gauss-seq-draws", 0),
            );
            let tail = rr.iter().filter(|v| **v >= cfg.r * en).count() as f64 / rr.len() as f64;
            Ok((quantile(&rr, cfg.quantile), tail))
        });
        let per_rep: Vec<(f64, f64)> = per_rep.into_iter().collect::<Result<_>>()?;
        eps.push(en);
        radii.push(median(&per_rep.iter().map(|p| p.0).collect::<Vec<_>>()));
        tails.push(median(&per_rep.iter().map(|p| p.1).collect::<Vec<_>>()));
    }
    let lx: Vec<f64> = cfg.n_grid.iter().map(|n| (*n as f64).ln()).collect();
    let ly: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let slope_fit = Some(fit_slope(&lx, &ly, 0.95)?);
    let neps: Vec<f64> = cfg
        .n_grid
        .iter()
        .zip(&eps)
        .map(|(n, e)| *n as f64 * e * e)
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("gamma".to_string(), g);
    constants.insert("c".to_string(), cfg.c);
    constants.insert("quantile".to_string(), cfg.quantile);
    Ok(RateCurve {
        label: format!("gauss-seq gamma={g} c={}", cfg.c),
        n_grid: cfg.n_grid.clone(),
        epsilon_n: eps,
        decay: decay_trend(&neps, &tails),
        tail_mass: tails,
        q_radius: radii,
        slope_fit,
        predicted: -g / (2.0 * g + 1.0),
        config: RateCheckConfig {
            r: cfg.r,
            replicates: cfg.replicates,
            mc_budget: cfg.draws,
            constants,
        },
    })
}

/// Nonlinear autoregression Xᵢ = f₀(Xᵢ₋₁) + ξᵢ with f₀ = (M/2)·tanh, a
/// uniform step-function prior on K ≤ `max_cells` cells of [−Aₙ, Aₙ], and
/// εₙ = (√(log n)/n)^{1/3}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArCurveConfig {
    pub amplitude: f64,
    pub max_cells: usize,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Prior draws per cell for self-normalised importance sampling.
    pub budget: usize,
    pub r: f64,
    pub bins: usize,
}

impl Default for ArCurveConfig {
    fn default() -> Self {
        Self {
            amplitude: 2.0,
            max_cells: 8,
            n_grid: vec![50, 100, 200, 400],
            replicates: 5,
            budget: 20_000,
            r: 4.0,
            bins: 1000,
        }
    }
}

pub fn ar_epsilon(n: usize) -> f64 {
    let nf = n as f64;
    (nf.ln().sqrt() / nf).powf(1.0 / 3.0)
}

/// Posterior mass of ‖f − f₀‖²_{L²(φ)} ≥ (r εₙ)² for one data set. The
/// prior and likelihood factorise over cells, so each cell is weighted
/// separately and the squared distance Σₖ gₖ(βₖ) + tail is bracketed by
/// binned convolution; the bracket midpoint is returned.
pub fn ar_tail_mass(cfg: &ArCurveConfig, n: usize, seed: u64) -> Result<f64> {
    let m = cfg.amplitude;
    let f0 = SmoothFn::scaled_tanh(0.5 * m);
    let model = ArModel::new(RegressionFn::Smooth(f0.clone()), m)?;
    let eps = ar_epsilon(n);
    let design = ar_design(
        eps,
        f0.lipschitz,
        model.admissible_b1(),
        |x| f0.eval(x),
        Some(cfg.max_cells),
    )?;
    let (a, k) = (design.half_width, design.cells);
    let x = model.sample_truth(n, rng::derive_seed(seed, "ar-data", n as u64))?;
    let stats = CellStats::from_batch(a, k, &x);
    let quad = Quadrature::new(20, 8);
    let edges = cell_edges(a, k);
    let density = crate::numeric::phi;
    let mut costs_coeffs = Vec::with_capacity(k);
    for c in 0..k {
        let (lo, hi) = (edges[c], edges[c + 1]);
        let mass = quad.integrate(density, lo, hi);
        let a1 = quad.integrate(|t| f0.eval(t) * density(t), lo, hi);
        let a2 = quad.integrate(|t| f0.eval(t).powi(2) * density(t), lo, hi);
        costs_coeffs.push((mass, a1, a2));
    }
    let outside = 2.0 * quad.integrate(|t| f0.eval(t).powi(2) * density(t), a, 12.0);
    let threshold = (cfg.r * eps).powi(2) - outside;
    let mut blocks = Vec::with_capacity(k);
    for c in 0..k {
        let mut r = rng::stream(seed, "ar-prior", ((n as u64) << 8) | c as u64);
        let draws: Vec<f64> = (0..cfg.budget).map(|_| r.random_range(-m..m)).collect();
        let b =
            block_importance(draws, |beta| stats.cell_loglik(c, beta)).map_err(|e| match e {
                Error::DegenerateEss { ess, .. } => Error::DegenerateEss { ess, at: Some(n) },
                other => other,
            })?;
        blocks.push(b);
    }
    let cost_fns: Vec<Box<dyn Fn(f64) -> f64>> = costs_coeffs
        .iter()
        .map(|&(mass, a1, a2)| {
            Box::new(move |b: f64| (mass * b * b - 2.0 * a1 * b + a2).max(0.0))
                as Box<dyn Fn(f64) -> f64>
        })
        .collect();
    let refs: Vec<&dyn Fn(f64) -> f64> = cost_fns.iter().map(|f| f.as_ref()).collect();
    Ok(separable_tail_probability(&blocks, &refs, threshold, cfg.bins)?.midpoint())
}

pub fn ar_curve(cfg: &ArCurveConfig, seed: u64) -> Result<RateCurve> {
    check_grid(&cfg.n_grid)?;
    if cfg.replicates == 0 || cfg.budget == 0 {
        return Err(Error::BudgetZero);
    }
    let mut tails = Vec::new();
    let mut eps = Vec::new();
    for &n in &cfg.n_grid {
        let per_rep = par_map(cfg.replicates, |rep| {
            ar_tail_mass(
                cfg,
                n,
                rng::derive_seed(seed, "ar-replicate", ((n as u64) << 16) | rep as u64),
            )
        });
        let per_rep: Vec<f64> = per_rep.into_iter().collect::<Result<_>>()?;
        tails.push(median(&per_rep));
        eps.push(ar_epsilon(n));
    }
    let neps: Vec<f64> = cfg
        .n_grid
        .iter()
        .zip(&eps)
        .map(|(n, e)| *n as f64 * e * e)
        .collect();
    let mut constants = BTreeMap::new();
    constants.insert("amplitude".to_string(), cfg.amplitude);
    constants.insert("max_cells".to_string(), cfg.max_cells as f64);
    constants.insert("bins".to_string(), cfg.bins as f64);
    Ok(RateCurve {
        label: format!("ar M={} K<={}", cfg.amplitude, cfg.max_cells),
        n_grid: cfg.n_grid.clone(),
        epsilon_n: eps,
        decay: decay_trend(&neps, &tails),
        tail_mass: tails,
        q_radius: Vec::new(),
        slope_fit: None,
        predicted: -1.0 / 3.0,
        config: RateCheckConfig {
            r: cfg.r,
            replicates: cfg.replicates,
            mc_budget: cfg.budget,
            constants,
        },
    })
}

/// Finite-prior (pseudo)posterior curve over a family of discrete
/// experiments, with distance d_n⁰ to the truth. `beta = None` uses the
/// ordinary posterior routine.
pub struct DiscreteCurveSpec<'a> {
    pub family: &'a (dyn Fn(usize) -> Result<DiscreteExperiment> + Sync),
    pub weights: &'a [f64],
    pub epsilon: &'a (dyn Fn(usize) -> f64 + Sync),
    pub beta: Option<f64>,
    pub n_grid: Vec<usize>,
    pub r: f64,
    pub replicates: usize,
    pub quantile: f64,
}

pub fn discrete_curve(spec: &DiscreteCurveSpec<'_>, seed: u64) -> Result<RateCurve> {
    check_grid(&spec.n_grid)?;
    if spec.replicates == 0 {
        return Err(Error::BudgetZero);
    }
    let mut tails = Vec::new();
    let mut radii = Vec::new();
    let mut eps = Vec::new();
    for &n in &spec.n_grid {
        let exp = (spec.family)(n)?;
        let p = exp.num_params();
        let t0 = *exp.truth();
        let dist: Vec<f64> = (0..p)
            .map(|t| {
                crate::divergences::avg_hellinger(&exp.coordinate_pairs(t0, ParameterId(t), n))
            })
            .collect::<Result<_>>()?;
        let points: Vec<ParameterId> = (0..p).map(ParameterId).collect();
        let en = (spec.epsilon)(n);
        let per_rep = par_map(spec.replicates, |rep| -> Result<(f64, f64)> {
            let x = exp.sample_truth(
                n,
                rng::derive_seed(seed, "discrete-replicate", ((n as u64) << 16) | rep as u64),
            )?;
            let post = match spec.beta {
                None => posterior_exact(&exp, &points, spec.weights, &x)?,
                Some(b) => pseudoposterior_exact(&exp, &points, spec.weights, &x, b)?,
            };
            let tail = posterior_tail_mass(&post, |t| dist[t.0], spec.r * en);
            // weighted quantile of d over the posterior
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|a, b| dist[*a].total_cmp(&dist[*b]));
            let w = post.weights();
            let mut acc = 0.0;
            let mut q = dist[order[p - 1]];
            for &i in &order {
                acc += w[i];
                if acc >= spec.quantile {
                    q = dist[i];
                    break;
                }
            }
            Ok((q, tail.clamp(0.0, 1.0)))
        });
        let per_rep: Vec<(f64, f64)> = per_rep.into_iter().collect::<Result<_>>()?;
        eps.push(en);
        radii.push(median(&per_rep.iter().map(|v| v.0).collect::<Vec<_>>()));
        tails.push(median(&per_rep.iter().map(|v| v.1).collect::<Vec<_>>()));
    }
    let neps: Vec<f64> = spec
        .n_grid
        .iter()
        .zip(&eps)
        .map(|(n, e)| *n as f64 * e * e)
        .collect();
    let mut constants = BTreeMap::new();
    if let Some(b) = spec.beta {
        constants.insert("beta".to_string(), b);
    }
    constants.insert("quantile".to_string(), spec.quantile);
    Ok(RateCurve {
        label: match spec.beta {
            None => "discrete posterior".to_string(),
            Some(b) => format!("discrete pseudoposterior beta={b}"),
        },
        n_grid: spec.n_grid.clone(),
        epsilon_n: eps,
        decay: decay_trend(&neps, &tails),
        tail_mass: tails,
        q_radius: radii,
        slope_fit: None,
        predicted: -0.5,
        config: RateCheckConfig {
            r: spec.r,
            replicates: spec.replicates,
            mc_budget: 0,
            constants,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitter_recovers_known_slope() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7).collect();
        let noise = [
            0.003, -0.002, 0.001, -0.004, 0.002, 0.0, -0.001, 0.003, -0.002, 0.001,
        ];
        let y: Vec<f64> = x
            .iter()
            .zip(noise)
            .map(|(a, e)| 2.0 - 0.333 * a + e)
            .collect();
        let f = fit_slope(&x, &y, 0.95).unwrap();
        assert!((f.slope + 0.333).abs() < 0.01);
        assert!(f.lower < f.slope && f.slope < f.upper);
        let exact = fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], 0.95).unwrap();
        assert_eq!(exact.slope, 2.0);
        assert_eq!(exact.stderr, 0.0);
        assert!(fit_slope(&[1.0], &[1.0], 0.95).is_err());
    }

    #[test]
    fn decay_flag() {
        let d = decay_trend(&[1.0, 2.0, 3.0], &[0.5, 0.2, 0.05]);
        assert!(d.consistent && d.fitted_b.unwrap() > 0.0);
        assert!(!decay_trend(&[1.0, 2.0, 3.0], &[0.5, 0.6, 0.05]).consistent);
        assert!(decay_trend(&[1.0, 2.0], &[0.0, 0.0]).consistent);
    }

    #[test]
    fn ar_epsilon_values() {
        assert!((ar_epsilon(100) - (4.605170186f64.sqrt() / 100.0).powf(1.0 / 3.0)).abs() < 1e-9);
    }
}

//! Bound checks: Monte Carlo estimates of the left-hand sides of the
//! moment and evidence inequalities, compared with their closed-form
//! right-hand sides and, where the sample space allows, with the exact law.

use serde::{Deserialize, Serialize};

use crate::divergences::satisfies_inequality_one;
use crate::entropy::{hausdorff_constant, WeightedParameterSet};
use crate::error::{Error, Result};
use crate::experiment::{DiscreteExperiment, ParameterId};
use crate::models::{FiniteMarkovChain, MarkovModel};
use crate::neighborhoods::{prior_mass, Geometry, NeighborhoodKind, NeighborhoodSpec, PriorSource};
use crate::numeric::log_sum_exp;

use super::oracle::{exact_functional, mc_functional, FiniteModel};

pub const DEFAULT_SLACK_SIGMAS: f64 = 3.0;
/// Tolerance used in place of the σ-slack when the lhs is exact.
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Prop2,
    Prop0,
    Prop3,
    Prop4,
    Lemma2,
    Lemma4,
    Lemma5,
    EntropySandwich,
    ShellCondition,
    GlobalCondition,
}

impl CheckName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::Prop2 => "prop2",
            CheckName::Prop0 => "prop0",
            CheckName::Prop3 => "prop3",
            CheckName::Prop4 => "prop4",
            CheckName::Lemma2 => "lemma2",
            CheckName::Lemma4 => "lemma4",
            CheckName::Lemma5 => "lemma5",
            CheckName::EntropySandwich => "entropy_sandwich",
            CheckName::ShellCondition => "shell_condition",
            CheckName::GlobalCondition => "global_condition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// The (n, ε, α, β, δ, Θ₁, prior) tuple a check ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub model: String,
    pub n: usize,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub theta1: Vec<usize>,
    pub prior: Vec<f64>,
    pub mc_budget: usize,
    pub seed: u64,
}

/// MC lhs against the exact expectation: agreement within `slack_sigmas`
/// standard deviations of the MC mean (σ from the exact variance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub exact: f64,
    pub sigma: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: CheckName,
    pub lhs: Estimate,
    pub rhs: f64,
    pub verdict: Verdict,
    pub slack_sigmas: f64,
    pub config: CheckConfig,
    pub oracle: Option<OracleComparison>,
}

/// Pass iff lhs ≤ rhs + slack·stderr; exact lhs (stderr 0) uses [`EXACT_TOLERANCE`].
pub fn decide(lhs: Estimate, rhs: f64, slack_sigmas: f64) -> Verdict {
    let allowance = if lhs.stderr == 0.0 {
        EXACT_TOLERANCE
    } else {
        slack_sigmas * lhs.stderr
    };
    if lhs.estimate <= rhs + allowance {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass && self.oracle.is_none_or(|o| o.agrees)
    }

    /// Re-derives the verdict from the stored numbers.
    pub fn is_consistent(&self) -> bool {
        decide(self.lhs, self.rhs, self.slack_sigmas) == self.verdict
            && self.lhs.stderr >= 0.0
            && self.slack_sigmas >= 0.0
    }
}

/// Pairwise distances on a finite parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetric {
    pub name: String,
    d: Vec<Vec<f64>>,
}

impl FiniteMetric {
    pub fn from_fn(name: impl Into<String>, p: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let d = (0..p)
            .map(|i| (0..p).map(|j| if i == j { 0.0 } else { f(i, j) }).collect())
            .collect();
        Self {
            name: name.into(),
            d,
        }
    }

    /// d_n⁰ = ((1/n) Σᵢ Hᵢ²)^{1/2}.
    pub fn average_hellinger(exp: &DiscreteExperiment, n: usize) -> Self {
        Self::from_fn("average_hellinger", exp.num_params(), |a, b| {
            crate::divergences::avg_hellinger(&exp.coordinate_pairs(
                ParameterId(a),
                ParameterId(b),
                n,
            ))
            .unwrap()
        })
    }

    /// ν-averaged Hellinger distance of the transition laws.
    pub fn transition_hellinger(chain: &FiniteMarkovChain) -> Self {
        Self::from_fn("transition_hellinger", chain.num_params(), |a, b| {
            chain.transition_hellinger(ParameterId(a), ParameterId(b))
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.d[a][b]
    }
}

/// Inputs shared by all bound checks.
#[derive(Debug, Clone)]
pub struct BoundSetup<'a> {
    /// Prior weights indexed by parameter.
    pub weights: &'a [f64],
    /// Θ₁; `None` is the whole grid.
    pub theta1: Option<&'a [usize]>,
    pub n: usize,
    pub epsilon: f64,
    pub mc_budget: usize,
    pub seed: u64,
    pub slack_sigmas: f64,
}

impl BoundSetup<'_> {
    fn validate<M: FiniteModel + ?Sized>(&self, model: &M) -> Result<()> {
        let p = model.num_params();
        if self.weights.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidWeights("negative prior weight".into()));
        }
        if let Some(t) = self.theta1 {
            if let Some(&bad) = t.iter().find(|&&i| i >= p) {
                return Err(Error::OutOfRange {
                    what: "Θ₁ index",
                    value: bad as f64,
                    lo: 0.0,
                    hi: (p - 1) as f64,
                });
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if self.n == 0 {
            return Err(Error::OutOfRange {
                what: "n",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        if self.mc_budget == 0 {
            return Err(Error::BudgetZero);
        }
        Ok(())
    }

    fn theta1_ids(&self, p: usize) -> Vec<usize> {
        match self.theta1 {
            Some(t) => {
                let mut v = t.to_vec();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => (0..p).collect(),
        }
    }

    /// {θ ∈ Θ₁ : d(θ, θ₀) > ε}.
    fn far_set<M: FiniteModel + ?Sized>(&self, model: &M, metric: &FiniteMetric) -> Vec<usize> {
        let t0 = model.truth_index();
        self.theta1_ids(model.num_params())
            .into_iter()
            .filter(|&t| metric.distance(t, t0) > self.epsilon)
            .collect()
    }

    fn config(&self, model: &str) -> CheckConfig {
        CheckConfig {
            model: model.to_string(),
            n: self.n,
            epsilon: self.epsilon,
            alpha: None,
            beta: None,
            delta: None,
            c: None,
            theta1: self.theta1_ids(self.weights.len()),
            prior: self.weights.to_vec(),
            mc_budget: self.mc_budget,
            seed: self.seed,
        }
    }
}

fn open_unit(what: &'static str, value: f64, hi: f64) -> Result<()> {
    if value > 0.0 && value < hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what,
            value,
            lo: 0.0,
            hi,
        })
    }
}

/// Numerical check of d² ≤ −(2/n) log(1 − H(p_a⁽ⁿ⁾, p_b⁽ⁿ⁾)²/2) on all pairs.
pub fn check_inequality_one<M: FiniteModel + ?Sized>(
    model: &M,
    metric: &FiniteMetric,
    n: usize,
) -> Result<()> {
    let p = model.num_params();
    for a in 0..p {
        for b in 0..a {
            let h_sq = 2.0 * (1.0 - model.joint_affinity(a, b, n));
            if !satisfies_inequality_one(metric.distance(a, b), h_sq, n) {
                return Err(Error::MetricViolatesIneq1(b, a));
            }
        }
    }
    Ok(())
}

/// (Σ_{θ∈S} w_θ R_θ^β)^α evaluated in log space; 0 for empty S.
fn restricted_moment<'a>(
    ids: &'a [usize],
    weights: &'a [f64],
    beta: f64,
    alpha: f64,
) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |lr: &[f64]| {
        if ids.is_empty() {
            return 0.0;
        }
        let terms: Vec<f64> = ids
            .iter()
            .map(|&t| weights[t].ln() + beta * lr[t])
            .collect();
        (alpha * log_sum_exp(&terms)).exp()
    }
}

/// MC estimate of E₀[φ] plus the exact oracle when enumeration is feasible.
fn estimate_with_oracle<M: FiniteModel + ?Sized>(
    model: &M,
    setup: &BoundSetup<'_>,
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
    trivially_zero: bool,
) -> Result<(Estimate, Option<OracleComparison>)> {
    if trivially_zero {
        let lhs = Estimate {
            estimate: 0.0,
            stderr: 0.0,
        };
        let oracle = OracleComparison {
            exact: 0.0,
            sigma: 0.0,
            agrees: true,
        };
        return Ok((lhs, Some(oracle)));
    }
    let (mean, se) = mc_functional(model, setup.n, setup.mc_budget, setup.seed, phi)?;
    let lhs = Estimate {
        estimate: mean,
        stderr: se,
    };
    let oracle = model.atoms(setup.n)?.map(|atoms| {
        let (exact, var) = exact_functional(&atoms, phi);
        let sigma = (var / setup.mc_budget as f64).sqrt();
        let allowance = if sigma == 0.0 {
            EXACT_TOLERANCE
        } else {
            setup.slack_sigmas * sigma
        };
        OracleComparison {
            exact,
            sigma,
            agrees: (mean - exact).abs() <= allowance,
        }
    });
    Ok((lhs, oracle))
}

fn hausdorff_on(
    ids: &[usize],
    setup: &BoundSetup<'_>,
    metric: &FiniteMetric,
    radius: f64,
    alpha: f64,
) -> Result<f64> {
    let set = WeightedParameterSet::from_metric(
        ids.to_vec(),
        ids.iter().map(|&t| setup.weights[t]).collect(),
        |i, j| metric.distance(ids[i], ids[j]),
    )?;
    Ok(hausdorff_constant(&set, radius, alpha)?
        .hausdorff_constant
        .unwrap_or(0.0))
}

/// E₀(∫_{θ∈Θ₁: d>ε} R_θ dΠ)^α ≤ 2 e^{−½(1−α)(1−2δ)²nε²} C(δε, {d>ε}, α, d)
/// for a metric satisfying inequality (1).
pub fn check_prop2<M: FiniteModel + ?Sized>(
    model: &M,
    metric: &FiniteMetric,
    setup: &BoundSetup<'_>,
    alpha: f64,
    delta: f64,
) -> Result<BoundCheck> {
    open_unit("delta", delta, 0.5)?;
    open_unit("alpha", alpha, 1.0)?;
    setup.validate(model)?;
    check_inequality_one(model, metric, setup.n)?;
    let far = setup.far_set(model, metric);
    let phi = restricted_moment(&far, setup.weights, 1.0, alpha);
    let trivial = far.iter().all(|&t| setup.weights[t] == 0.0);
    let (lhs, oracle) = estimate_with_oracle(model, setup, &phi, trivial)?;
    let c = hausdorff_on(&far, setup, metric, delta * setup.epsilon, alpha)?;
    let neps = setup.n as f64 * setup.epsilon * setup.epsilon;
    let rhs = 2.0 * (-0.5 * (1.0 - alpha) * (1.0 - 2.0 * delta).powi(2) * neps).exp() * c;
    let mut config = setup.config(model.label());
    config.alpha = Some(alpha);
    config.delta = Some(delta);
    Ok(BoundCheck {
        name: CheckName::Prop2,
        lhs,
        rhs,
        verdict: decide(lhs, rhs, setup.slack_sigmas),
        slack_sigmas: setup.slack_sigmas,
        config,
        oracle,
    })
}

/// E₀(∫_{θ∈Θ₁: d>ε} R_θ^β dΠ)^α ≤ e^{−((1−β)∧β)αnε²} Π(θ∈Θ₁: d>ε)^α.
/// Reported as `prop3` when `metric` is the average Hellinger metric of an
/// i.n.i.d. experiment, `prop0` otherwise.
pub fn check_prop0_prop3<M: FiniteModel + ?Sized>(
    model: &M,
    metric: &FiniteMetric,
    setup: &BoundSetup<'_>,
    alpha: f64,
    beta: f64,
    name: CheckName,
) -> Result<BoundCheck> {
    if !matches!(name, CheckName::Prop0 | CheckName::Prop3) {
        return Err(Error::Precondition(format!(
            "{} is not a pseudoposterior moment check",
            name.as_str()
        )));
    }
    open_unit("alpha", alpha, 1.0)?;
    open_unit("beta", beta, 1.0)?;
    setup.validate(model)?;
    check_inequality_one(model, metric, setup.n)?;
    let far = setup.far_set(model, metric);
    let phi = restricted_moment(&far, setup.weights, beta, alpha);
    let mass: f64 = far.iter().map(|&t| setup.weights[t]).sum();
    let (lhs, oracle) = estimate_with_oracle(model, setup, &phi, mass == 0.0)?;
    let neps = setup.n as f64 * setup.epsilon * setup.epsilon;
    let rhs = (-(beta.min(1.0 - beta)) * alpha * neps).exp() * mass.powf(alpha);
    let mut config = setup.config(model.label());
    config.alpha = Some(alpha);
    config.beta = Some(beta);
    Ok(BoundCheck {
        name,
        lhs,
        rhs,
        verdict: decide(lhs, rhs, setup.slack_sigmas),
        slack_sigmas: setup.slack_sigmas,
        config,
        oracle,
    })
}

/// Markov version: E₀(∫_{d>ε} (q_θ/q₀)(X₀) ∏ p_θ/p₀ dΠ)^α
/// ≤ 2 e^{−(½−α)(√a₀/2 − √a₁δ)²nε²} C(δε, {d>ε}, α, d), d the transition Hellinger metric.
pub fn check_prop4(
    chain: &FiniteMarkovChain,
    setup: &BoundSetup<'_>,
    alpha: f64,
    delta: f64,
) -> Result<BoundCheck> {
    let bounds = chain.bounds();
    bounds.validate()?;
    open_unit("alpha", alpha, 0.5)?;
    open_unit("delta", delta, bounds.delta_cap())?;
    setup.validate(chain)?;
    let metric = FiniteMetric::transition_hellinger(chain);
    let far = setup.far_set(chain, &metric);
    let phi = restricted_moment(&far, setup.weights, 1.0, alpha);
    let trivial = far.iter().all(|&t| setup.weights[t] == 0.0);
    let (lhs, oracle) = estimate_with_oracle(chain, setup, &phi, trivial)?;
    let c = hausdorff_on(&far, setup, &metric, delta * setup.epsilon, alpha)?;
    let neps = setup.n as f64 * setup.epsilon * setup.epsilon;
    let gap = bounds.a0.sqrt() / 2.0 - bounds.a1.sqrt() * delta;
    let rhs = 2.0 * (-(0.5 - alpha) * gap * gap * neps).exp() * c;
    let mut config = setup.config(FiniteModel::label(chain));
    config.alpha = Some(alpha);
    config.delta = Some(delta);
    Ok(BoundCheck {
        name: CheckName::Prop4,
        lhs,
        rhs,
        verdict: decide(lhs, rhs, setup.slack_sigmas),
        slack_sigmas: setup.slack_sigmas,
        config,
        oracle,
    })
}

/// Which evidence lower bound a lemma check targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "snake_case")]
pub enum EvidenceLemma {
    /// ∫R dΠ ≤ e^{−nε²(3+2c)} Π(W_n).
    Lemma2,
    /// ∫R^β dΠ ≤ e^{−nε²(3+2c)β} Π(W̄_n), independent coordinates.
    Lemma4 { beta: f64 },
    /// Markov chains: ∫R dΠ ≤ e^{−nε²(3a₁+4c)} Π(W¹_n).
    Lemma5 { a1: f64 },
}

/// P₀(evidence below threshold) ≤ e^{−nε²c}, estimated as a frequency over
/// `setup.mc_budget` truth replicates.
pub fn check_lemma<M>(
    model: &M,
    setup: &BoundSetup<'_>,
    lemma: EvidenceLemma,
    c: f64,
) -> Result<BoundCheck>
where
    M: FiniteModel + Geometry<Param = ParameterId>,
{
    open_unit("c", c, f64::INFINITY)?;
    setup.validate(model)?;
    let p = model.num_params();
    let neps = setup.n as f64 * setup.epsilon * setup.epsilon;
    let (kind, log_factor, beta, name) = match lemma {
        EvidenceLemma::Lemma2 => (
            NeighborhoodKind::W,
            -neps * (3.0 + 2.0 * c),
            1.0,
            CheckName::Lemma2,
        ),
        EvidenceLemma::Lemma4 { beta } => {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::OutOfRange {
                    what: "beta",
                    value: beta,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
            (
                NeighborhoodKind::WBar,
                -neps * (3.0 + 2.0 * c) * beta,
                beta,
                CheckName::Lemma4,
            )
        }
        EvidenceLemma::Lemma5 { a1 } => {
            if !(a1 >= 1.0) {
                return Err(Error::BoundsCertificateInvalid(format!(
                    "a1 = {a1} is below 1"
                )));
            }
            (
                NeighborhoodKind::W1,
                -neps * (3.0 * a1 + 4.0 * c),
                1.0,
                CheckName::Lemma5,
            )
        }
    };
    let spec = NeighborhoodSpec::new(kind, setup.epsilon, setup.n)?;
    let points: Vec<ParameterId> = (0..p).map(ParameterId).collect();
    let mass = prior_mass(
        &spec,
        model,
        PriorSource::Finite {
            points: &points,
            weights: setup.weights,
        },
        1,
        setup.seed,
    )?
    .estimate;
    if !(mass > 0.0) {
        return Err(Error::EmptyNeighborhood);
    }
    let log_threshold = log_factor + mass.ln();
    let support: Vec<usize> = (0..p).filter(|&t| setup.weights[t] > 0.0).collect();
    let weights = setup.weights;
    let phi = move |lr: &[f64]| {
        let terms: Vec<f64> = support
            .iter()
            .map(|&t| weights[t].ln() + beta * lr[t])
            .collect();
        if log_sum_exp(&terms) <= log_threshold {
            1.0
        } else {
            0.0
        }
    };
    let (lhs, oracle) = estimate_with_oracle(model, setup, &phi, false)?;
    let rhs = (-neps * c).exp();
    let mut config = setup.config(model.label());
    config.c = Some(c);
    if let EvidenceLemma::Lemma4 { beta } = lemma {
        config.beta = Some(beta);
    }
    Ok(BoundCheck {
        name,
        lhs,
        rhs,
        verdict: decide(lhs, rhs, setup.slack_sigmas),
        slack_sigmas: setup.slack_sigmas,
        config,
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> DiscreteExperiment {
        let rows = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&p| vec![1.0 - p, p])
            .collect();
        DiscreteExperiment::iid("bernoulli-grid", rows, 2).unwrap()
    }

    fn setup(weights: &[f64]) -> BoundSetup<'_> {
        BoundSetup {
            weights,
            theta1: None,
            n: 20,
            epsilon: 0.3,
            mc_budget: 2000,
            seed: 5,
            slack_sigmas: DEFAULT_SLACK_SIGMAS,
        }
    }

    #[test]
    fn verdict_rule() {
        let e = |estimate, stderr| Estimate { estimate, stderr };
        assert_eq!(decide(e(1.05, 0.02), 1.0, 3.0), Verdict::Pass);
        assert_eq!(decide(e(1.07, 0.02), 1.0, 3.0), Verdict::Fail);
        assert_eq!(decide(e(1.0 + 1e-13, 0.0), 1.0, 3.0), Verdict::Pass);
        assert_eq!(decide(e(1.0 + 1e-11, 0.0), 1.0, 3.0), Verdict::Fail);
    }

    #[test]
    fn prop2_passes_and_matches_oracle() {
        let e = grid();
        let w = [0.2; 5];
        let m = FiniteMetric::average_hellinger(&e, 20);
        let c = check_prop2(&e, &m, &setup(&w), 0.5, 0.25).unwrap();
        assert!(c.passed(), "{c:?}");
        assert!(c.is_consistent());
        let o = c.oracle.unwrap();
        assert!(o.agrees && o.sigma > 0.0);
        assert_eq!(c.config.theta1, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn prop2_preconditions() {
        let e = grid();
        let w = [0.2; 5];
        let m = FiniteMetric::average_hellinger(&e, 20);
        assert!(matches!(
            check_prop2(&e, &m, &setup(&w), 0.5, 0.5),
            Err(Error::OutOfRange { what: "delta", .. })
        ));
        assert!(matches!(
            check_prop2(&e, &m, &setup(&w), 1.0, 0.25),
            Err(Error::OutOfRange { what: "alpha", .. })
        ));
        // a metric that is too large violates inequality (1)
        let big = FiniteMetric::from_fn("big", 5, |_, _| 5.0);
        assert!(matches!(
            check_prop2(&e, &big, &setup(&w), 0.5, 0.25),
            Err(Error::MetricViolatesIneq1(..))
        ));
    }

    #[test]
    fn empty_far_set_gives_exact_zero() {
        let e = grid();
        let w = [0.0, 0.5, 0.5, 0.0, 0.0];
        let m = FiniteMetric::average_hellinger(&e, 20);
        let c = check_prop2(&e, &m, &setup(&w), 0.5, 0.25).unwrap();
        assert_eq!(
            c.lhs,
            Estimate {
                estimate: 0.0,
                stderr: 0.0
            }
        );
        assert!(c.passed());
        let theta1 = [2usize];
        let s = BoundSetup {
            theta1: Some(&theta1),
            ..setup(&[0.2; 5])
        };
        let c = check_prop0_prop3(&e, &m, &s, 0.5, 0.5, CheckName::Prop0).unwrap();
        assert_eq!(c.lhs.estimate, 0.0);
        assert_eq!(c.rhs, 0.0);
        assert!(c.passed());
    }

    #[test]
    fn symmetric_beta_exponent() {
        let e = grid();
        let w = [0.2; 5];
        let m = FiniteMetric::average_hellinger(&e, 20);
        let c = check_prop0_prop3(&e, &m, &setup(&w), 0.4, 0.5, CheckName::Prop0).unwrap();
        let expected = (-0.5 * 0.4 * 20.0 * 0.09f64).exp() * 0.4f64.powf(0.4);
        assert!((c.rhs - expected).abs() < 1e-15);
        assert!(c.passed());
    }

    #[test]
    fn lemma2_point_prior_never_falls_below() {
        let e = grid();
        let w = [0.0, 0.0, 1.0, 0.0, 0.0];
        let c = check_lemma(&e, &setup(&w), EvidenceLemma::Lemma2, 1.0).unwrap();
        assert_eq!(c.lhs.estimate, 0.0);
        assert!(c.passed());
    }

    #[test]
    fn prop4_trivial_and_cap() {
        let chain = FiniteMarkovChain::two_state(
            "chain",
            &[(0.3, 0.3), (0.4, 0.2), (0.2, 0.5), (0.5, 0.5)],
            0,
        )
        .unwrap();
        let w = [0.25; 4];
        let only_truth = [0usize];
        let s = BoundSetup {
            theta1: Some(&only_truth),
            ..setup(&w)
        };
        let c = check_prop4(&chain, &s, 0.25, 0.1).unwrap();
        assert_eq!(c.lhs.estimate, 0.0);
        let cap = chain.bounds().delta_cap();
        assert!(check_prop4(&chain, &setup(&w), 0.25, cap).is_err());
        assert!(check_prop4(&chain, &setup(&w), 0.5, 0.1).is_err());
    }
}

//! Nonlinear AR(1): Xᵢ = f(Xᵢ₋₁) + εᵢ with standard normal errors, X₀ ~ N(0,1),
//! and the step-function sieve used as its prior support.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::markov::{markov_joint_loglik, DensityRatioBounds, MarkovModel};
use crate::error::{Error, Result};
use crate::experiment::{Experiment, SampleBatch};
use crate::neighborhoods::Geometry;
use crate::numeric::{log_phi, normal_cdf, phi, Quadrature};
use crate::rng;

/// Outer limit of the quadrature range; φ-mass beyond it is below 1e-32.
const QUAD_RANGE: f64 = 12.0;
/// Truncated transition mass on the state lattice is at least 1 − this.
const LATTICE_MASS_DEFECT: f64 = 1e-10;

/// f_β = Σ β_k 1{I_k} with I_k the K equal cells of [−A, A).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub half_width: f64,
    pub beta: Vec<f64>,
}

impl StepFunction {
    pub fn new(half_width: f64, beta: Vec<f64>) -> Result<Self> {
        if !(half_width > 0.0) || beta.is_empty() {
            return Err(Error::Precondition(
                "step function needs A > 0 and at least one cell".into(),
            ));
        }
        Ok(Self { half_width, beta })
    }

    pub fn cells(&self) -> usize {
        self.beta.len()
    }

    pub fn edges(&self) -> Vec<f64> {
        cell_edges(self.half_width, self.cells())
    }

    pub fn cell_of(&self, x: f64) -> Option<usize> {
        cell_index(self.half_width, self.cells(), x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cell_of(x).map_or(0.0, |k| self.beta[k])
    }

    pub fn same_partition(&self, other: &StepFunction) -> bool {
        self.half_width == other.half_width && self.cells() == other.cells()
    }
}

pub fn cell_edges(half_width: f64, cells: usize) -> Vec<f64> {
    (0..=cells)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / cells as f64)
        .collect()
}

pub fn cell_index(half_width: f64, cells: usize, x: f64) -> Option<usize> {
    if !(x >= -half_width && x < half_width) {
        return None;
    }
    let k = ((x + half_width) / (2.0 * half_width) * cells as f64).floor() as usize;
    Some(k.min(cells - 1))
}

/// ν-masses ∫_{I_k} φ of the cells.
pub fn cell_masses(half_width: f64, cells: usize) -> Vec<f64> {
    cell_edges(half_width, cells)
        .windows(2)
        .map(|w| normal_cdf(w[1]) - normal_cdf(w[0]))
        .collect()
}

/// ‖β‖_* = (Σ β_k² ν(I_k))^{1/2}, so that ‖f_β₁ − f_β₂‖₂ = ‖β₁ − β₂‖_*.
pub fn step_norm(beta: &[f64], masses: &[f64]) -> f64 {
    beta.iter()
        .zip(masses)
        .map(|(b, m)| b * b * m)
        .sum::<f64>()
        .sqrt()
}

/// A smooth regression function with known sup-norm and Lipschitz constant.
#[derive(Clone)]
pub struct SmoothFn {
    pub name: String,
    pub sup: f64,
    pub lipschitz: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl SmoothFn {
    pub fn new(
        name: impl Into<String>,
        sup: f64,
        lipschitz: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            sup,
            lipschitz,
            f: Arc::new(f),
        }
    }

    /// x ↦ c·tanh(x).
    pub fn scaled_tanh(c: f64) -> Self {
        Self::new(format!("{c}*tanh"), c.abs(), c.abs(), move |x| c * x.tanh())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn")
            .field("name", &self.name)
            .field("sup", &self.sup)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum RegressionFn {
    Step(StepFunction),
    Smooth(SmoothFn),
}

impl RegressionFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            RegressionFn::Step(s) => s.eval(x),
            RegressionFn::Smooth(s) => s.eval(x),
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            RegressionFn::Step(s) => s.beta.iter().fold(0.0, |m, b| m.max(b.abs())),
            RegressionFn::Smooth(s) => s.sup,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            RegressionFn::Step(s) => s.edges(),
            RegressionFn::Smooth(_) => Vec::new(),
        }
    }
}

/// ∫ h(f₁(x) − f₂(x)) φ(x) dx, exact on a common step partition, otherwise by
/// composite Gauss–Legendre split at every jump.
pub fn integrate_difference(f1: &RegressionFn, f2: &RegressionFn, h: impl Fn(f64) -> f64) -> f64 {
    if let (RegressionFn::Step(a), RegressionFn::Step(b)) = (f1, f2) {
        if a.same_partition(b) {
            let masses = cell_masses(a.half_width, a.cells());
            let outside = 1.0 - masses.iter().sum::<f64>();
            return a
                .beta
                .iter()
                .zip(&b.beta)
                .zip(&masses)
                .map(|((x, y), m)| h(x - y) * m)
                .sum::<f64>()
                + h(0.0) * outside;
        }
    }
    let mut breaks = vec![-QUAD_RANGE, QUAD_RANGE];
    breaks.extend(
        f1.breakpoints()
            .into_iter()
            .filter(|x| x.abs() < QUAD_RANGE),
    );
    breaks.extend(
        f2.breakpoints()
            .into_iter()
            .filter(|x| x.abs() < QUAD_RANGE),
    );
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    // each panel is open on the right, so evaluate step functions from the left edge
    Quadrature::new(20, 6).integrate_breaks(|x| h(f1.eval(x) - f2.eval(x)) * phi(x), &breaks)
}

/// ‖f₁ − f₂‖₂² in L₂(ν), ν = φ dμ.
pub fn l2_distance_sq(f1: &RegressionFn, f2: &RegressionFn) -> f64 {
    integrate_difference(f1, f2, |d| d * d)
}

/// ν-averaged conditional Hellinger distance squared: ∫ 2(1 − e^{−Δ²/8}) dν.
pub fn transition_hellinger_sq(f1: &RegressionFn, f2: &RegressionFn) -> f64 {
    integrate_difference(f1, f2, |d| -2.0 * (-d * d / 8.0).exp_m1())
}

/// ν-averaged conditional H*²: ∫ (2/3)(e^{3Δ²/8} − 1) dν.
pub fn transition_hstar_sq(f0: &RegressionFn, f: &RegressionFn) -> f64 {
    integrate_difference(f0, f, |d| 2.0 / 3.0 * (3.0 * d * d / 8.0).exp_m1())
}

/// The AR(1) experiment with amplitude bound M on the regression functions.
#[derive(Debug, Clone)]
pub struct ArModel {
    truth: RegressionFn,
    amplitude: f64,
    lattice: f64,
}

impl ArModel {
    pub fn new(truth: RegressionFn, amplitude: f64) -> Result<Self> {
        if truth.sup() > amplitude {
            return Err(Error::AmplitudeExceeded {
                sup: truth.sup(),
                bound: amplitude,
            });
        }
        // smallest Y with P(|c + ε| > Y) ≤ 1e-10 for every |c| ≤ M
        let (mut lo, mut hi) = (0.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * normal_cdf(-(mid - amplitude)) > LATTICE_MASS_DEFECT {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            truth,
            amplitude,
            lattice: amplitude + hi,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn lattice_half_width(&self) -> f64 {
        self.lattice
    }

    pub fn truth_fn(&self) -> &RegressionFn {
        &self.truth
    }

    pub fn check_amplitude(&self, f: &RegressionFn) -> Result<()> {
        if f.sup() > self.amplitude {
            return Err(Error::AmplitudeExceeded {
                sup: f.sup(),
                bound: self.amplitude,
            });
        }
        Ok(())
    }

    /// b₁ = 2 (a₀/a₁)^{1/4}, the largest value with (b₁²/8)√(a₁/a₀) ≤ 1/2.
    pub fn admissible_b1(&self) -> f64 {
        let b = self.bounds();
        2.0 * (b.a0 / b.a1).powf(0.25)
    }
}

impl MarkovModel for ArModel {
    type Param = RegressionFn;

    fn transition_logdensity(&self, f: &RegressionFn, y: f64, x: f64) -> f64 {
        log_phi(y - f.eval(x))
    }

    fn initial_logdensity(&self, _f: &RegressionFn, x0: f64) -> f64 {
        log_phi(x0)
    }

    fn reference_density(&self, y: f64) -> f64 {
        phi(y)
    }

    /// a₀ = e^{−M²/2 − MY}, a₁ = e^{−M²/2 + MY} for φ(y − c)/φ(y) over |c| ≤ M, |y| ≤ Y.
    fn bounds(&self) -> DensityRatioBounds {
        let (m, y) = (self.amplitude, self.lattice);
        DensityRatioBounds {
            a0: (-m * m / 2.0 - m * y).exp(),
            a1: (-m * m / 2.0 + m * y).exp(),
            lattice: Some(y),
        }
    }
}

impl Experiment for ArModel {
    type Param = RegressionFn;

    fn name(&self) -> &str {
        "ar"
    }

    fn truth(&self) -> &RegressionFn {
        &self.truth
    }

    fn log_density(&self, f: &RegressionFn, x: &SampleBatch) -> Result<f64> {
        markov_joint_loglik(self, f, x)
    }

    fn sample(&self, f: &RegressionFn, n: usize, seed: u64) -> Result<SampleBatch> {
        let mut r = rng::stream(seed, "ar-sample", 0);
        let mut v = Vec::with_capacity(n + 1);
        let mut x: f64 = StandardNormal.sample(&mut r);
        v.push(x);
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut r);
            x = f.eval(x) + e;
            v.push(x);
        }
        Ok(SampleBatch::with_initial(v))
    }
}

impl Geometry for ArModel {
    type Param = RegressionFn;

    fn shape(&self) -> &str {
        "autoregression"
    }

    fn transition_hstar_sq(&self, f: &RegressionFn) -> Result<f64> {
        Ok(transition_hstar_sq(&self.truth, f))
    }

    /// q_f = φ for every f.
    fn initial_hstar_sq(&self, _f: &RegressionFn) -> Result<f64> {
        Ok(0.0)
    }
}

/// Sieve design for a target rate ε: window A, cell count K and projected truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArDesign {
    pub half_width: f64,
    pub cells: usize,
    /// Cell count before any cap was applied.
    pub cells_uncapped: usize,
    pub beta0: Vec<f64>,
    /// L·A/K, bounding sup |f_β₀ − f₀| on the window.
    pub sup_error_bound: f64,
}

/// A = 2√(log(1/ε)), K = ⌊3LA/(b₁ε)⌋ + 1 (optionally capped), and
/// β₀,k = f₀ at the midpoint of cell k.
pub fn ar_design(
    epsilon: f64,
    lipschitz: f64,
    b1: f64,
    f0: impl Fn(f64) -> f64,
    cap: Option<usize>,
) -> Result<ArDesign> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let half_width = 2.0 * (1.0 / epsilon).ln().sqrt();
    let raw = (3.0 * lipschitz * half_width / (b1 * epsilon)).floor();
    let cells_uncapped = if raw.is_finite() && raw < 1e9 {
        raw as usize + 1
    } else {
        usize::MAX
    };
    let cells = cap.map_or(cells_uncapped, |c| cells_uncapped.min(c.max(1)));
    let beta0 = (1..=cells)
        .map(|k| f0(-half_width + (2 * k - 1) as f64 * half_width / cells as f64))
        .collect();
    Ok(ArDesign {
        half_width,
        cells,
        cells_uncapped,
        beta0,
        sup_error_bound: lipschitz * half_width / cells as f64,
    })
}

/// Per-cell transition counts and response sums: the step-function likelihood
/// depends on the data only through these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub counts: Vec<f64>,
    pub sums: Vec<f64>,
}

impl CellStats {
    pub fn from_batch(half_width: f64, cells: usize, x: &SampleBatch) -> Self {
        let mut counts = vec![0.0; cells];
        let mut sums = vec![0.0; cells];
        for w in x.values().windows(2) {
            if let Some(k) = cell_index(half_width, cells, w[0]) {
                counts[k] += 1.0;
                sums[k] += w[1];
            }
        }
        Self { counts, sums }
    }

    /// β-dependent part of the log-likelihood of cell k.
    pub fn cell_loglik(&self, k: usize, beta: f64) -> f64 {
        -0.5 * (self.counts[k] * beta * beta - 2.0 * self.sums[k] * beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_formulas() {
        let d = ar_design((-1.0f64).exp(), 1.0, 1.0, |_| 0.0, None).unwrap();
        assert!((d.half_width - 2.0).abs() < 1e-15);
        let d = ar_design(0.5, 1.0, 1.0, |_| 0.3, None).unwrap();
        assert!((d.half_width - 1.665109).abs() < 1e-6);
        assert_eq!(d.cells, 10);
        assert!(d.beta0.iter().all(|b| *b == 0.3));
        let d = ar_design(0.5, 1.0, 1.0, |x| x.tanh(), Some(4)).unwrap();
        assert_eq!((d.cells, d.cells_uncapped), (4, 10));
        assert!(ar_design(1.5, 1.0, 1.0, |x| x, None).is_err());
    }

    #[test]
    fn midpoint_projection_meets_sup_bound() {
        let d = ar_design(0.2, 1.0, 1.0, |x| x.sin(), None).unwrap();
        let s = StepFunction::new(d.half_width, d.beta0.clone()).unwrap();
        let worst = (0..20_000)
            .map(|i| -d.half_width + 2.0 * d.half_width * (i as f64 + 0.5) / 20_000.0)
            .map(|x| (s.eval(x) - x.sin()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= d.sup_error_bound);
    }

    #[test]
    fn norm_identity_on_common_partition() {
        let a = StepFunction::new(2.0, vec![0.3, -0.5, 1.0]).unwrap();
        let b = StepFunction::new(2.0, vec![-0.2, 0.1, 0.4]).unwrap();
        let m = cell_masses(2.0, 3);
        let diff: Vec<f64> = a.beta.iter().zip(&b.beta).map(|(x, y)| x - y).collect();
        let exact = l2_distance_sq(
            &RegressionFn::Step(a.clone()),
            &RegressionFn::Step(b.clone()),
        );
        assert!((exact.sqrt() - step_norm(&diff, &m)).abs() < 1e-15);
        // same value through quadrature on shifted copies of the partition
        let smooth = |s: StepFunction| {
            RegressionFn::Smooth(SmoothFn::new("step", 1.0, 0.0, move |x| s.eval(x)))
        };
        let q = l2_distance_sq(&smooth(a), &RegressionFn::Step(b));
        assert!((q - exact).abs() < 1e-4);
    }

    #[test]
    fn constant_shift_hellinger() {
        let c = 0.7;
        let f1 = RegressionFn::Smooth(SmoothFn::new("c", c, 0.0, move |_| c));
        let f2 = RegressionFn::Smooth(SmoothFn::new("0", 0.0, 0.0, |_| 0.0));
        let h2 = transition_hellinger_sq(&f1, &f2);
        assert!((h2 - 2.0 * (1.0 - (-c * c / 8.0f64).exp())).abs() < 1e-12);
        assert_eq!(transition_hellinger_sq(&f2, &f2), 0.0);
    }

    #[test]
    fn amplitude_and_bounds() {
        let m = ArModel::new(RegressionFn::Smooth(SmoothFn::scaled_tanh(1.0)), 2.0).unwrap();
        let b = m.bounds();
        b.validate().unwrap();
        let y = m.lattice_half_width();
        assert!(2.0 * normal_cdf(-(y - 2.0)) <= 1e-10 * (1.0 + 1e-9));
        for i in 0..=40 {
            let yy = -y + 2.0 * y * i as f64 / 40.0;
            for c in [-2.0, -1.0, 0.0, 1.5, 2.0] {
                let r = phi(yy - c) / phi(yy);
                assert!(r >= b.a0 * (1.0 - 1e-12) && r <= b.a1 * (1.0 + 1e-12));
            }
        }
        assert!(ArModel::new(RegressionFn::Smooth(SmoothFn::scaled_tanh(3.0)), 2.0).is_err());
        let small = 2.0 * (b.a0 / b.a1).powf(0.25);
        assert!((m.admissible_b1() - small).abs() < 1e-300 + 1e-12 * small);
    }

    #[test]
    fn zero_regression_is_iid_normal() {
        let zero = RegressionFn::Step(StepFunction::new(1.0, vec![0.0]).unwrap());
        let m = ArModel::new(zero.clone(), 1.0).unwrap();
        let x = m.sample_truth(5, 3).unwrap();
        let l = m.log_density(&zero, &x).unwrap();
        let direct: f64 = x.values().iter().map(|v| log_phi(*v)).sum();
        assert!((l - direct).abs() < 1e-12);
        assert_eq!(transition_hellinger_sq(&zero, &zero), 0.0);
    }

    #[test]
    fn cell_stats_reproduce_loglik_differences() {
        let f0 = RegressionFn::Smooth(SmoothFn::scaled_tanh(1.0));
        let m = ArModel::new(f0, 2.0).unwrap();
        let x = m.sample_truth(200, 9).unwrap();
        let s1 = StepFunction::new(2.0, vec![0.5, -1.0, 0.2, 1.5]).unwrap();
        let s2 = StepFunction::new(2.0, vec![-0.3, 0.4, 0.0, 1.0]).unwrap();
        let st = CellStats::from_batch(2.0, 4, &x);
        let by_stats: f64 = (0..4)
            .map(|k| st.cell_loglik(k, s1.beta[k]) - st.cell_loglik(k, s2.beta[k]))
            .sum();
        let direct = m.log_density(&RegressionFn::Step(s1), &x).unwrap()
            - m.log_density(&RegressionFn::Step(s2), &x).unwrap();
        assert!((by_stats - direct).abs() < 1e-9);
    }
}

//! Statistical experiments: parametrized finite-n log-densities with a
//! designated true parameter, plus samplers from arbitrary parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Index into a finite parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParameterId(pub usize);

/// One draw of X⁽ⁿ⁾. Markov batches carry X₀ in slot 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    values: Vec<f64>,
    has_initial: bool,
}

impl SampleBatch {
    pub fn new(values: Vec<f64>) -> Self {
        Self {
            values,
            has_initial: false,
        }
    }

    pub fn with_initial(values: Vec<f64>) -> Self {
        Self {
            values,
            has_initial: true,
        }
    }

    /// Sample size n (excludes X₀).
    pub fn n(&self) -> usize {
        if self.has_initial {
            self.values.len().saturating_sub(1)
        } else {
            self.values.len()
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_initial(&self) -> bool {
        self.has_initial
    }

    /// Observations after X₀.
    pub fn observations(&self) -> &[f64] {
        if self.has_initial {
            &self.values[1..]
        } else {
            &self.values
        }
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        let expected = if self.has_initial { n + 1 } else { n };
        if self.values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// A family p_θ⁽ⁿ⁾ with true parameter θ₀.
pub trait Experiment: Sync {
    type Param: Clone + Send + Sync;

    fn name(&self) -> &str;

    fn truth(&self) -> &Self::Param;

    /// log p_θ⁽ⁿ⁾(x) in nats; n is the batch size.
    fn log_density(&self, theta: &Self::Param, x: &SampleBatch) -> Result<f64>;

    /// Draw X⁽ⁿ⁾ ~ p_θ⁽ⁿ⁾, deterministically in `seed`.
    fn sample(&self, theta: &Self::Param, n: usize, seed: u64) -> Result<SampleBatch>;

    fn sample_truth(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "n",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        self.sample(self.truth(), n, seed)
    }

    /// log R_θ(x) = log p_θ(x) − log p_θ₀(x); −∞ when p_θ(x) = 0.
    fn log_likelihood_ratio(&self, theta: &Self::Param, x: &SampleBatch) -> Result<f64> {
        let l0 = self.log_density(self.truth(), x)?;
        if l0 == f64::NEG_INFINITY {
            return Err(Error::NonDominated);
        }
        let l = self.log_density(theta, x)?;
        if l == f64::NEG_INFINITY {
            return Ok(l);
        }
        Ok(l - l0)
    }
}

/// Per-parameter probability tables over a finite outcome set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfTable {
    rows: Vec<Vec<f64>>,
}

impl PmfTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let b = rows.first().map(|r| r.len()).ok_or(Error::EmptyList)?;
        if b == 0 {
            return Err(Error::InvalidPmf("no outcomes".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != b {
                return Err(Error::DimensionMismatch {
                    expected: b,
                    got: r.len(),
                });
            }
            if r.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
                return Err(Error::InvalidPmf(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = crate::numeric::compensated_sum(r.iter().copied());
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidPmf(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn num_params(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, theta: usize) -> &[f64] {
        &self.rows[theta]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Product experiment on finite outcomes: coordinate i uses table
/// `tables[i % tables.len()]`, so one table means i.i.d. data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteExperiment {
    name: String,
    tables: Vec<PmfTable>,
    truth: ParameterId,
}

impl DiscreteExperiment {
    pub fn new(name: impl Into<String>, tables: Vec<PmfTable>, truth: ParameterId) -> Result<Self> {
        let first = tables.first().ok_or(Error::EmptyList)?;
        let (p, b) = (first.num_params(), first.num_outcomes());
        for t in &tables {
            if t.num_params() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: t.num_params(),
                });
            }
            if t.num_outcomes() != b {
                return Err(Error::DimensionMismatch {
                    expected: b,
                    got: t.num_outcomes(),
                });
            }
        }
        if truth.0 >= p {
            return Err(Error::OutOfRange {
                what: "truth index",
                value: truth.0 as f64,
                lo: 0.0,
                hi: (p - 1) as f64,
            });
        }
        Ok(Self {
            name: name.into(),
            tables,
            truth,
        })
    }

    /// i.i.d. experiment from a single table.
    pub fn iid(name: impl Into<String>, rows: Vec<Vec<f64>>, truth: usize) -> Result<Self> {
        Self::new(name, vec![PmfTable::new(rows)?], ParameterId(truth))
    }

    pub fn num_params(&self) -> usize {
        self.tables[0].num_params()
    }

    pub fn num_outcomes(&self) -> usize {
        self.tables[0].num_outcomes()
    }

    pub fn tables(&self) -> &[PmfTable] {
        &self.tables
    }

    pub fn is_iid(&self) -> bool {
        self.tables.len() == 1
    }

    /// p_{θ,i}, the pmf of coordinate i (0-based).
    pub fn pmf(&self, theta: ParameterId, i: usize) -> &[f64] {
        self.tables[i % self.tables.len()].row(theta.0)
    }

    /// Per-coordinate (p_{θ₀,i}, p_{θ,i}) pairs for i < n.
    pub fn coordinate_pairs(
        &self,
        a: ParameterId,
        b: ParameterId,
        n: usize,
    ) -> Vec<(&[f64], &[f64])> {
        (0..n).map(|i| (self.pmf(a, i), self.pmf(b, i))).collect()
    }

    fn outcome(&self, x: f64) -> Result<usize> {
        let o = x as usize;
        if x < 0.0 || x.fract() != 0.0 || o >= self.num_outcomes() {
            return Err(Error::OutOfRange {
                what: "outcome",
                value: x,
                lo: 0.0,
                hi: (self.num_outcomes() - 1) as f64,
            });
        }
        Ok(o)
    }

    fn check_param(&self, theta: ParameterId) -> Result<()> {
        if theta.0 >= self.num_params() {
            return Err(Error::OutOfRange {
                what: "parameter index",
                value: theta.0 as f64,
                lo: 0.0,
                hi: (self.num_params() - 1) as f64,
            });
        }
        Ok(())
    }
}

/// Inverse-cdf draw of an outcome index from one uniform variate.
pub(crate) fn draw_index(pmf: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in pmf.iter().enumerate() {
        if *p > 0.0 {
            last = k;
            acc += p;
            if u < acc {
                return k;
            }
        }
    }
    last
}

impl Experiment for DiscreteExperiment {
    type Param = ParameterId;

    fn name(&self) -> &str {
        &self.name
    }

    fn truth(&self) -> &ParameterId {
        &self.truth
    }

    fn log_density(&self, theta: &ParameterId, x: &SampleBatch) -> Result<f64> {
        self.check_param(*theta)?;
        let mut s = 0.0;
        for (i, &v) in x.observations().iter().enumerate() {
            let p = self.pmf(*theta, i)[self.outcome(v)?];
            if p == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            s += p.ln();
        }
        Ok(s)
    }

    fn sample(&self, theta: &ParameterId, n: usize, seed: u64) -> Result<SampleBatch> {
        self.check_param(*theta)?;
        let mut r = rng::stream(seed, "discrete-sample", 0);
        let values = (0..n)
            .map(|i| draw_index(self.pmf(*theta, i), r.random::<f64>()) as f64)
            .collect();
        Ok(SampleBatch::new(values))
    }

    fn log_likelihood_ratio(&self, theta: &ParameterId, x: &SampleBatch) -> Result<f64> {
        self.check_param(*theta)?;
        let mut s = 0.0;
        let mut minus_inf = false;
        for (i, &v) in x.observations().iter().enumerate() {
            let o = self.outcome(v)?;
            let p0 = self.pmf(self.truth, i)[o];
            if p0 == 0.0 {
                return Err(Error::NonDominated);
            }
            let p = self.pmf(*theta, i)[o];
            if p == 0.0 {
                minus_inf = true;
            } else {
                s += (p / p0).ln();
            }
        }
        Ok(if minus_inf { f64::NEG_INFINITY } else { s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin() -> DiscreteExperiment {
        DiscreteExperiment::iid("coin", vec![vec![0.5, 0.5], vec![0.25, 0.75]], 0).unwrap()
    }

    #[test]
    fn ratio_matches_table_lookup() {
        let e = coin();
        let x = SampleBatch::new(vec![1.0]);
        let r = e.log_likelihood_ratio(&ParameterId(1), &x).unwrap();
        assert!((r - 0.405465).abs() < 1e-6);
        assert_eq!(e.log_likelihood_ratio(&ParameterId(0), &x).unwrap(), 0.0);
        let x2 = SampleBatch::new(vec![1.0, 0.0]);
        let r2 = e.log_likelihood_ratio(&ParameterId(1), &x2).unwrap();
        assert!((r2 - (1.5f64.ln() + 0.5f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_handling() {
        let e = DiscreteExperiment::iid("z", vec![vec![0.5, 0.5], vec![1.0, 0.0]], 0).unwrap();
        let x = SampleBatch::new(vec![1.0]);
        assert_eq!(
            e.log_likelihood_ratio(&ParameterId(1), &x).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            e.log_likelihood_ratio(&ParameterId(1), &x).unwrap().exp(),
            0.0
        );
        let e = DiscreteExperiment::iid("z", vec![vec![0.5, 0.5], vec![1.0, 0.0]], 1).unwrap();
        assert_eq!(
            e.log_likelihood_ratio(&ParameterId(0), &x),
            Err(Error::NonDominated)
        );
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(PmfTable::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(PmfTable::new(vec![vec![-0.1, 1.1]]).is_err());
        assert!(PmfTable::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(PmfTable::new(vec![vec![0.5, 0.5 + 5e-13]]).is_ok());
    }

    #[test]
    fn sampling_is_deterministic_and_degenerate_pmf_is_respected() {
        let e = coin();
        assert_eq!(
            e.sample_truth(50, 3).unwrap(),
            e.sample_truth(50, 3).unwrap()
        );
        assert_ne!(
            e.sample_truth(50, 3).unwrap(),
            e.sample_truth(50, 4).unwrap()
        );
        let d = DiscreteExperiment::iid("d", vec![vec![1.0, 0.0]], 0).unwrap();
        assert!(d
            .sample_truth(100, 1)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 0.0));
        assert!(e.sample_truth(0, 1).is_err());
    }

    #[test]
    fn empirical_frequency_in_binomial_band() {
        let e = coin();
        let x = e.sample_truth(100_000, 11).unwrap();
        let f = x.values().iter().filter(|v| **v == 0.0).count() as f64 / 1e5;
        assert!((f - 0.5).abs() < 0.006, "{f}");
    }

    #[test]
    fn dimension_checks() {
        let x = SampleBatch::with_initial(vec![0.0, 1.0, 0.0]);
        assert_eq!(x.n(), 2);
        assert!(x.check_len(2).is_ok());
        assert_eq!(
            x.check_len(3),
            Err(Error::DimensionMismatch {
                expected: 4,
                got: 3
            })
        );
    }
}

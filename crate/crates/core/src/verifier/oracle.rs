//! Finite-parameter models and their exact sampling distributions.
//!
//! For product experiments on finitely many outcomes the vector of
//! log-likelihood ratios depends on the data only through the outcome
//! counts of each coordinate table, so enumerating count compositions with
//! multinomial weights gives the exact law of any functional of the ratios.
//! Markov chains are handled the same way with (X₀, current state,
//! transition counts) as the sufficient statistic.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::experiment::{DiscreteExperiment, Experiment, ParameterId, SampleBatch};
use crate::models::FiniteMarkovChain;
use crate::numeric::{par_map, NeumaierSum};
use crate::rng;

/// Atom count above which exact enumeration is declined.
pub const ATOM_LIMIT: usize = 2_000_000;

/// One support point of the law of (log R_θ)_θ under the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub prob: f64,
    pub log_ratios: Vec<f64>,
}

/// A model with parameters 0..p whose likelihood ratios can be evaluated
/// on truth samples and, for moderate n, enumerated exactly.
pub trait FiniteModel: Sync {
    fn label(&self) -> &str;

    fn num_params(&self) -> usize;

    fn truth_index(&self) -> usize;

    fn sample_truth_batch(&self, n: usize, seed: u64) -> Result<SampleBatch>;

    /// log R_θ(x) for every θ.
    fn log_ratios(&self, x: &SampleBatch) -> Result<Vec<f64>>;

    /// Exact law of the log-ratio vector at sample size n; `None` when
    /// enumeration would exceed [`ATOM_LIMIT`].
    fn atoms(&self, n: usize) -> Result<Option<Vec<Atom>>>;

    /// Σ √(p_a p_b) over the n-fold sample space.
    fn joint_affinity(&self, a: usize, b: usize, n: usize) -> f64;
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// All vectors of `parts` non-negative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; parts];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
    }
    if parts > 0 {
        rec(0, total, &mut cur, &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl FiniteModel for DiscreteExperiment {
    fn label(&self) -> &str {
        self.name()
    }

    fn num_params(&self) -> usize {
        DiscreteExperiment::num_params(self)
    }

    fn truth_index(&self) -> usize {
        self.truth().0
    }

    fn sample_truth_batch(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        self.sample_truth(n, seed)
    }

    fn log_ratios(&self, x: &SampleBatch) -> Result<Vec<f64>> {
        (0..DiscreteExperiment::num_params(self))
            .map(|t| self.log_likelihood_ratio(&ParameterId(t), x))
            .collect()
    }

    fn atoms(&self, n: usize) -> Result<Option<Vec<Atom>>> {
        let t = self.tables().len();
        let b = self.num_outcomes();
        let p = DiscreteExperiment::num_params(self);
        let truth = self.truth().0;
        let group_sizes: Vec<usize> = (0..t)
            .map(|g| (0..n).filter(|i| i % t == g).count())
            .collect();
        let mut total = 1.0f64;
        for &m in &group_sizes {
            total *= binomial(m + b - 1, b - 1);
        }
        if total > ATOM_LIMIT as f64 {
            return Ok(None);
        }
        let lf = ln_factorials(n);
        // per group: list of (log prob, log-ratio contribution per θ)
        let mut groups: Vec<Vec<(f64, Vec<f64>)>> = Vec::with_capacity(t);
        for (g, &m) in group_sizes.iter().enumerate() {
            let table = &self.tables()[g];
            let p0 = table.row(truth);
            let mut list = Vec::new();
            'comp: for c in compositions(m, b) {
                let mut lp = lf[m];
                for (o, &k) in c.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    if p0[o] == 0.0 {
                        continue 'comp;
                    }
                    lp += k as f64 * p0[o].ln() - lf[k];
                }
                let lr = (0..p)
                    .map(|th| {
                        let row = table.row(th);
                        let mut s = NeumaierSum::default();
                        for (o, &k) in c.iter().enumerate() {
                            if k == 0 {
                                continue;
                            }
                            if row[o] == 0.0 {
                                return f64::NEG_INFINITY;
                            }
                            s.add(k as f64 * (row[o] / p0[o]).ln());
                        }
                        s.value()
                    })
                    .collect();
                list.push((lp, lr));
            }
            groups.push(list);
        }
        let mut atoms = vec![(0.0, vec![0.0; p])];
        for list in &groups {
            let mut next = Vec::with_capacity(atoms.len() * list.len());
            for (lp, lr) in &atoms {
                for (glp, glr) in list {
                    next.push((
                        lp + glp,
                        lr.iter().zip(glr).map(|(a, b)| a + b).collect::<Vec<f64>>(),
                    ));
                }
            }
            atoms = next;
        }
        Ok(Some(
            atoms
                .into_iter()
                .map(|(lp, log_ratios)| Atom {
                    prob: lp.exp(),
                    log_ratios,
                })
                .collect(),
        ))
    }

    fn joint_affinity(&self, a: usize, b: usize, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let (f, g) = (self.pmf(ParameterId(a), i), self.pmf(ParameterId(b), i));
                f.iter().zip(g).map(|(x, y)| (x * y).sqrt()).sum::<f64>()
            })
            .product()
    }
}

impl FiniteModel for FiniteMarkovChain {
    fn label(&self) -> &str {
        self.name()
    }

    fn num_params(&self) -> usize {
        FiniteMarkovChain::num_params(self)
    }

    fn truth_index(&self) -> usize {
        self.truth().0
    }

    fn sample_truth_batch(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        self.sample_truth(n, seed)
    }

    fn log_ratios(&self, x: &SampleBatch) -> Result<Vec<f64>> {
        (0..FiniteMarkovChain::num_params(self))
            .map(|t| self.log_likelihood_ratio(&ParameterId(t), x))
            .collect()
    }

    fn atoms(&self, n: usize) -> Result<Option<Vec<Atom>>> {
        let s = self.num_states();
        let p = FiniteMarkovChain::num_params(self);
        let t0 = *self.truth();
        let m0 = self.transition(t0);
        // key: (x0, current state, flattened transition counts)
        let mut layer: BTreeMap<(usize, usize, Vec<u32>), f64> = BTreeMap::new();
        for (x0, &q) in self.initial(t0).iter().enumerate() {
            if q > 0.0 {
                layer.insert((x0, x0, vec![0; s * s]), q);
            }
        }
        for _ in 0..n {
            let mut next: BTreeMap<(usize, usize, Vec<u32>), f64> = BTreeMap::new();
            for ((x0, cur, counts), pr) in layer {
                for (y, &py) in m0[cur].iter().enumerate() {
                    if py == 0.0 {
                        continue;
                    }
                    let mut c = counts.clone();
                    c[cur * s + y] += 1;
                    *next.entry((x0, y, c)).or_insert(0.0) += pr * py;
                }
            }
            if next.len() > ATOM_LIMIT {
                return Ok(None);
            }
            layer = next;
        }
        let q0 = self.initial(t0);
        let atoms = layer
            .into_iter()
            .map(|((x0, _, counts), prob)| {
                let log_ratios = (0..p)
                    .map(|th| {
                        let (qt, mt) = (
                            self.initial(ParameterId(th)),
                            self.transition(ParameterId(th)),
                        );
                        if qt[x0] == 0.0 {
                            return f64::NEG_INFINITY;
                        }
                        let mut acc = NeumaierSum::default();
                        acc.add((qt[x0] / q0[x0]).ln());
                        for (idx, &k) in counts.iter().enumerate() {
                            if k == 0 {
                                continue;
                            }
                            let (x, y) = (idx / s, idx % s);
                            if mt[x][y] == 0.0 {
                                return f64::NEG_INFINITY;
                            }
                            acc.add(k as f64 * (mt[x][y] / m0[x][y]).ln());
                        }
                        acc.value()
                    })
                    .collect();
                Atom { prob, log_ratios }
            })
            .collect();
        Ok(Some(atoms))
    }

    fn joint_affinity(&self, a: usize, b: usize, n: usize) -> f64 {
        let s = self.num_states();
        let (qa, qb) = (self.initial(ParameterId(a)), self.initial(ParameterId(b)));
        let (ma, mb) = (
            self.transition(ParameterId(a)),
            self.transition(ParameterId(b)),
        );
        let mut v: Vec<f64> = (0..s).map(|x| (qa[x] * qb[x]).sqrt()).collect();
        for _ in 0..n {
            let mut next = vec![0.0; s];
            for x in 0..s {
                for y in 0..s {
                    next[y] += v[x] * (ma[x][y] * mb[x][y]).sqrt();
                }
            }
            v = next;
        }
        v.iter().sum()
    }
}

/// Monte Carlo mean and standard error of a functional of the log ratios
/// over `budget` truth samples; sample i uses seed stream ("mc-replicate", i).
pub fn mc_functional<M: FiniteModel + ?Sized>(
    model: &M,
    n: usize,
    budget: usize,
    seed: u64,
    phi: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<(f64, f64)> {
    if budget == 0 {
        return Err(Error::BudgetZero);
    }
    let values = par_map(budget, |i| -> Result<f64> {
        let x = model.sample_truth_batch(n, rng::derive_seed(seed, "mc-replicate", i as u64))?;
        Ok(phi(&model.log_ratios(&x)?))
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let mut s = NeumaierSum::default();
    for v in &values {
        s.add(*v);
    }
    let mean = s.value() / budget as f64;
    if budget == 1 {
        return Ok((mean, 0.0));
    }
    let mut ss = NeumaierSum::default();
    for v in &values {
        ss.add((v - mean) * (v - mean));
    }
    let var = ss.value() / (budget - 1) as f64;
    Ok((mean, (var / budget as f64).sqrt()))
}

/// Exact mean and variance of a functional of the log ratios.
pub fn exact_functional(atoms: &[Atom], phi: &dyn Fn(&[f64]) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = atoms.iter().map(|a| phi(&a.log_ratios)).collect();
    let mut m = NeumaierSum::default();
    for (a, v) in atoms.iter().zip(&vals) {
        m.add(a.prob * v);
    }
    let mean = m.value();
    let mut var = NeumaierSum::default();
    for (a, v) in atoms.iter().zip(&vals) {
        var.add(a.prob * (v - mean) * (v - mean));
    }
    (mean, var.value().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(binomial(22, 2), 231.0);
    }

    #[test]
    fn discrete_atoms_sum_to_one_and_ratio_means_are_one() {
        let e =
            DiscreteExperiment::iid("c", vec![vec![0.5, 0.5], vec![0.2, 0.8], vec![0.9, 0.1]], 0)
                .unwrap();
        let atoms = e.atoms(12).unwrap().unwrap();
        assert_eq!(atoms.len(), 13);
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        assert!((total - 1.0).abs() < 1e-13);
        for th in 0..3 {
            let (m, _) = exact_functional(&atoms, &|lr| lr[th].exp());
            assert!((m - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn markov_atoms_match_path_enumeration() {
        let c = FiniteMarkovChain::two_state("m", &[(0.3, 0.4), (0.6, 0.2)], 0).unwrap();
        let n = 6;
        let atoms = c.atoms(n).unwrap().unwrap();
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        assert!((total - 1.0).abs() < 1e-14);
        // brute force over the 2^(n+1) paths
        let mut brute = 0.0;
        for bits in 0..(1u32 << (n + 1)) {
            let path: Vec<f64> = (0..=n).map(|i| ((bits >> i) & 1) as f64).collect();
            let x = SampleBatch::with_initial(path);
            let l0 = c.log_density(&ParameterId(0), &x).unwrap().exp();
            let lr = c.log_ratios(&x).unwrap();
            brute += l0 * lr[1].exp().sqrt();
        }
        let (m, _) = exact_functional(&atoms, &|lr| lr[1].exp().sqrt());
        assert!((m - brute).abs() < 1e-14, "{m} {brute}");
        // E₀√R₁ is the joint affinity
        assert!((m - c.joint_affinity(0, 1, n)).abs() < 1e-14);
    }

    #[test]
    fn inid_atoms_handle_uneven_groups() {
        use crate::experiment::PmfTable;
        let t1 = PmfTable::new(vec![vec![0.2, 0.3, 0.5], vec![0.4, 0.4, 0.2]]).unwrap();
        let t2 = PmfTable::new(vec![vec![0.6, 0.1, 0.3], vec![0.3, 0.3, 0.4]]).unwrap();
        let e = DiscreteExperiment::new("g", vec![t1, t2], ParameterId(0)).unwrap();
        let atoms = e.atoms(5).unwrap().unwrap();
        assert_eq!(atoms.len(), 10 * 6);
        let (m, _) = exact_functional(&atoms, &|lr| lr[1].exp().sqrt());
        assert!((m - e.joint_affinity(0, 1, 5)).abs() < 1e-14);
    }
}

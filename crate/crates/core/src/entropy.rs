//! Covering numbers and the Hausdorff α-constant
//! C(δ, Θ₁, α) = min Σ_k Π(B_k)^α over partitions of Θ₁ into pieces that each
//! fit in a closed δ-ball centred at a point of Θ₁.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Exact set-cover search up to this many points.
pub const EXACT_COVER_LIMIT: usize = 20;
/// Exact partition search up to this many points.
pub const EXACT_PARTITION_LIMIT: usize = 12;

/// Finite parameter subset with prior masses and a pairwise semimetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedParameterSet {
    ids: Vec<usize>,
    weights: Vec<f64>,
    dist: Vec<f64>,
}

impl WeightedParameterSet {
    /// Builds the set, tabulating `metric(i, j)` on local indices.
    pub fn from_metric(
        ids: Vec<usize>,
        weights: Vec<f64>,
        metric: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let m = ids.len();
        if weights.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let mut dist = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..i {
                let d = metric(i, j);
                let d2 = metric(j, i);
                if !(d >= 0.0) || (d - d2).abs() > 1e-12 * d.abs().max(1.0) {
                    return Err(Error::InvalidWeights(format!(
                        "metric is not symmetric at ({i}, {j})"
                    )));
                }
                dist[i * m + j] = d;
                dist[j * m + i] = d;
            }
        }
        Ok(Self { ids, weights, dist })
    }

    pub fn empty() -> Self {
        Self {
            ids: Vec::new(),
            weights: Vec::new(),
            dist: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// Restriction to the given local indices (in the given order).
    pub fn subset(&self, local: &[usize]) -> Self {
        let m = self.len();
        let k = local.len();
        let mut dist = vec![0.0; k * k];
        for (a, &i) in local.iter().enumerate() {
            for (b, &j) in local.iter().enumerate() {
                dist[a * k + b] = self.dist[i * m + j];
            }
        }
        Self {
            ids: local.iter().map(|&i| self.ids[i]).collect(),
            weights: local.iter().map(|&i| self.weights[i]).collect(),
            dist,
        }
    }

    fn balls(&self, delta: f64) -> Vec<u64> {
        let m = self.len();
        (0..m)
            .map(|c| {
                (0..m)
                    .filter(|&j| self.distance(c, j) <= delta)
                    .fold(0u64, |acc, j| acc | 1 << j)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub delta: f64,
    /// Parameter ids of the ball centres.
    pub ball_centers: Vec<usize>,
    /// For each point (local order), the index into `ball_centers`.
    pub assignment: Vec<usize>,
    pub covering_number: usize,
    pub alpha: Option<f64>,
    pub hausdorff_constant: Option<f64>,
    pub total_mass: f64,
    pub exact: bool,
}

impl CoverCertificate {
    /// Every point lies within δ of its assigned centre.
    pub fn is_valid_for(&self, set: &WeightedParameterSet) -> bool {
        let local_of = |id: usize| set.ids().iter().position(|&x| x == id);
        self.assignment.len() == set.len()
            && self.assignment.iter().enumerate().all(|(p, &b)| {
                b < self.ball_centers.len()
                    && local_of(self.ball_centers[b])
                        .is_some_and(|c| set.distance(c, p) <= self.delta)
            })
    }

    /// Π^α ≤ C ≤ Π^α · N^{1−α}, with relative tolerance `tol`.
    pub fn sandwich_holds(&self, tol: f64) -> bool {
        match (self.alpha, self.hausdorff_constant) {
            (Some(a), Some(c)) => {
                let lo = self.total_mass.powf(a);
                let hi = lo * (self.covering_number as f64).powf(1.0 - a);
                c >= lo * (1.0 - tol) - tol && c <= hi * (1.0 + tol) + tol
            }
            _ => true,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Minimal cover: `dp[mask]` is the fewest balls covering `mask`, branching on
/// the balls that contain the lowest point of `mask`.
fn exact_cover(balls: &[u64], m: usize) -> Vec<usize> {
    let full = (1usize << m) - 1;
    let mut dp = vec![u8::MAX; full + 1];
    let mut choice = vec![0u8; full + 1];
    dp[0] = 0;
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        for (c, &b) in balls.iter().enumerate() {
            if b >> low & 1 == 1 {
                let rest = mask & !(b as usize);
                let v = dp[rest].saturating_add(1);
                if v < dp[mask] {
                    dp[mask] = v;
                    choice[mask] = c as u8;
                }
            }
        }
    }
    let mut centers = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let c = choice[mask] as usize;
        centers.push(c);
        mask &= !(balls[c] as usize);
    }
    centers
}

/// Greedy cover: take the ball covering most uncovered points, lowest index on ties.
fn greedy_cover(set: &WeightedParameterSet, delta: f64) -> Vec<usize> {
    let m = set.len();
    let mut covered = vec![false; m];
    let mut left = m;
    let mut centers = Vec::new();
    while left > 0 {
        let mut best = (0usize, 0usize);
        for c in 0..m {
            let gain = (0..m)
                .filter(|&j| !covered[j] && set.distance(c, j) <= delta)
                .count();
            if gain > best.1 {
                best = (c, gain);
            }
        }
        let c = best.0;
        for j in 0..m {
            if !covered[j] && set.distance(c, j) <= delta {
                covered[j] = true;
                left -= 1;
            }
        }
        centers.push(c);
    }
    centers
}

/// Assigns each point to the first centre (in order) whose ball contains it.
fn assign(set: &WeightedParameterSet, centers: &[usize], delta: f64) -> Vec<usize> {
    (0..set.len())
        .map(|p| {
            centers
                .iter()
                .position(|&c| set.distance(c, p) <= delta)
                .expect("centres cover every point")
        })
        .collect()
}

fn pieces_constant(
    set: &WeightedParameterSet,
    assignment: &[usize],
    pieces: usize,
    alpha: f64,
) -> f64 {
    let mut mass = vec![Vec::new(); pieces];
    for (p, &b) in assignment.iter().enumerate() {
        mass[b].push(set.weights()[p]);
    }
    compensated_sum(mass.into_iter().map(|w| compensated_sum(w).powf(alpha)))
}

/// Covering number N(δ) with closed balls centred at points of the set.
pub fn covering_number(set: &WeightedParameterSet, delta: f64) -> Result<CoverCertificate> {
    check_delta(delta)?;
    let m = set.len();
    let exact = m <= EXACT_COVER_LIMIT;
    let centers = if m == 0 {
        Vec::new()
    } else if exact {
        exact_cover(&set.balls(delta), m)
    } else {
        greedy_cover(set, delta)
    };
    Ok(CoverCertificate {
        delta,
        assignment: assign(set, &centers, delta),
        covering_number: centers.len(),
        ball_centers: centers.iter().map(|&c| set.ids()[c]).collect(),
        alpha: None,
        hausdorff_constant: None,
        total_mass: set.total_mass(),
        exact,
    })
}

/// Hausdorff α-constant: exact partition search for at most 12 points,
/// greedy-cover partition otherwise. The certificate also carries N(δ).
pub fn hausdorff_constant(
    set: &WeightedParameterSet,
    delta: f64,
    alpha: f64,
) -> Result<CoverCertificate> {
    check_delta(delta)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange {
            what: "alpha",
            value: alpha,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let m = set.len();
    let cover = covering_number(set, delta)?;
    if m == 0 {
        return Ok(CoverCertificate {
            alpha: Some(alpha),
            hausdorff_constant: Some(0.0),
            ..cover
        });
    }
    if m > EXACT_PARTITION_LIMIT {
        let centers: Vec<usize> = cover
            .ball_centers
            .iter()
            .map(|id| set.ids().iter().position(|x| x == id).unwrap())
            .collect();
        let c = pieces_constant(set, &cover.assignment, centers.len(), alpha);
        return Ok(CoverCertificate {
            alpha: Some(alpha),
            hausdorff_constant: Some(c),
            exact: false,
            ..cover
        });
    }

    let balls = set.balls(delta);
    let full = (1usize << m) - 1;
    // centre that contains each feasible piece (lowest index), usize::MAX if none
    let mut center_of = vec![usize::MAX; full + 1];
    for (c, &b) in balls.iter().enumerate() {
        let b = b as usize;
        let mut s = b;
        loop {
            if center_of[s] == usize::MAX {
                center_of[s] = c;
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & b;
        }
    }
    let mut power = vec![0.0; full + 1];
    for (s, p) in power.iter_mut().enumerate().skip(1) {
        let w = compensated_sum((0..m).filter(|j| s >> j & 1 == 1).map(|j| set.weights()[j]));
        *p = w.powf(alpha);
    }
    let mut dp = vec![f64::INFINITY; full + 1];
    let mut choice = vec![0usize; full + 1];
    dp[0] = 0.0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest_bits = mask ^ low;
        let mut sub = rest_bits;
        loop {
            let piece = sub | low;
            if center_of[piece] != usize::MAX {
                let v = power[piece] + dp[mask ^ piece];
                if v < dp[mask] {
                    dp[mask] = v;
                    choice[mask] = piece;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest_bits;
        }
    }
    let mut centers = Vec::new();
    let mut assignment = vec![0usize; m];
    let mut mask = full;
    while mask != 0 {
        let piece = choice[mask];
        for (j, a) in assignment.iter_mut().enumerate() {
            if piece >> j & 1 == 1 {
                *a = centers.len();
            }
        }
        centers.push(set.ids()[center_of[piece]]);
        mask ^= piece;
    }
    Ok(CoverCertificate {
        delta,
        ball_centers: centers,
        assignment,
        covering_number: cover.covering_number,
        alpha: Some(alpha),
        hausdorff_constant: Some(dp[full]),
        total_mass: set.total_mass(),
        exact: true,
    })
}

/// Restriction to the annulus lo < d(θ, θ₀) ≤ hi; `d_to_truth` takes local indices.
pub fn shell(
    set: &WeightedParameterSet,
    d_to_truth: impl Fn(usize) -> f64,
    lo: f64,
    hi: f64,
) -> WeightedParameterSet {
    let keep: Vec<usize> = (0..set.len())
        .filter(|&i| {
            let d = d_to_truth(i);
            d > lo && d <= hi
        })
        .collect();
    set.subset(&keep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64], weights: Vec<f64>) -> WeightedParameterSet {
        let p = points.to_vec();
        WeightedParameterSet::from_metric((0..p.len()).collect(), weights, |i, j| {
            (p[i] - p[j]).abs()
        })
        .unwrap()
    }

    #[test]
    fn colinear_covers() {
        let s = line(&[0.0, 1.0, 2.0], vec![1.0 / 3.0; 3]);
        let c = covering_number(&s, 1.0).unwrap();
        assert_eq!(c.covering_number, 1);
        assert_eq!(c.ball_centers, vec![1]);
        assert!(c.exact && c.is_valid_for(&s));
        assert_eq!(covering_number(&s, 0.5).unwrap().covering_number, 3);
        assert_eq!(covering_number(&s, 5.0).unwrap().covering_number, 1);
    }

    #[test]
    fn hausdorff_uniform_three_points() {
        let s = line(&[0.0, 1.0, 2.0], vec![1.0 / 3.0; 3]);
        let c = hausdorff_constant(&s, 2.0, 0.5).unwrap();
        assert!((c.hausdorff_constant.unwrap() - 1.0).abs() < 1e-15);
        let c = hausdorff_constant(&s, 0.5, 0.5).unwrap();
        assert!((c.hausdorff_constant.unwrap() - 1.732051).abs() < 1e-6);
        assert_eq!(c.covering_number, 3);
        assert!(c.sandwich_holds(1e-12));
        assert!(c.is_valid_for(&s));
    }

    #[test]
    fn empty_set_conventions() {
        let s = WeightedParameterSet::empty();
        assert_eq!(covering_number(&s, 1.0).unwrap().covering_number, 0);
        assert_eq!(
            hausdorff_constant(&s, 1.0, 0.5).unwrap().hausdorff_constant,
            Some(0.0)
        );
    }

    #[test]
    fn shell_is_half_open() {
        let s = line(&[0.0, 1.0, 2.0, 3.0], vec![0.25; 4]);
        let sh = shell(&s, |i| i as f64, 1.0, 2.0);
        assert_eq!(sh.ids(), &[2]);
        assert!(shell(&s, |i| i as f64, 3.0, 10.0).is_empty());
        assert_eq!(
            shell(&s, |i| i as f64, 0.0, f64::INFINITY).ids(),
            &[1, 2, 3]
        );
    }

    #[test]
    fn uneven_weights_prefer_concentrated_pieces() {
        // cover of {0,1,2} at δ=1 could be one ball; partition search must find it
        let s = line(&[0.0, 1.0, 2.0, 10.0], vec![0.7, 0.1, 0.1, 0.1]);
        let c = hausdorff_constant(&s, 1.0, 0.5).unwrap();
        let expected = 0.9f64.sqrt() + 0.1f64.sqrt();
        assert!((c.hausdorff_constant.unwrap() - expected).abs() < 1e-14);
        assert_eq!(c.covering_number, 2);
    }

    #[test]
    fn greedy_path_beyond_exact_limits() {
        let pts: Vec<f64> = (0..25).map(|i| i as f64).collect();
        let s = line(&pts, vec![0.04; 25]);
        let c = covering_number(&s, 1.0).unwrap();
        assert!(!c.exact);
        assert!(c.is_valid_for(&s));
        assert!(c.covering_number >= 9);
        let h = hausdorff_constant(&s, 1.0, 0.5).unwrap();
        assert!(!h.exact && h.sandwich_holds(1e-12));
    }
}

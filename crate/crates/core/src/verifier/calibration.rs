//! Numeric calibration of design constants that the rate arguments leave implicit.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::gauss_seq::power_decay_truth;
use crate::rng;

/// Π(‖β − β₀‖_* ≤ r_outer) / Π(‖β − β₀‖_* ≤ r_inner) under the uniform prior on [−M, M]^K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallQuotient {
    pub cells: usize,
    pub r_outer: f64,
    pub r_inner: f64,
    pub log_quotient: f64,
    /// K·log(r_outer/r_inner): the quotient when neither ball is clipped by the cube.
    pub log_volume_ratio: f64,
    /// Both balls lie inside the cube, so the quotient is exact.
    pub exact: bool,
    pub draws: usize,
}

/// Fraction of the ellipsoid {‖β − β₀‖_* ≤ r} that lies inside [−M, M]^K, with
/// 1.0 returned exactly when its bounding box is inside.
fn inside_fraction(
    beta0: &[f64],
    masses: &[f64],
    amplitude: f64,
    radius: f64,
    draws: usize,
    seed: u64,
) -> (f64, bool) {
    let contained = beta0
        .iter()
        .zip(masses)
        .all(|(b, m)| (b.abs() + radius / m.sqrt()) <= amplitude);
    if contained {
        return (1.0, true);
    }
    let k = beta0.len();
    // one stream for every radius: the draws are nested, so the fraction is monotone in r
    let mut r = rng::stream(seed, "ball-quotient", 0);
    let mut hits = 0usize;
    let mut z = vec![0.0; k];
    for _ in 0..draws {
        // uniform in the unit ball: Gaussian direction, U^{1/K} radius
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut r);
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: f64 = r.random::<f64>().powf(1.0 / k as f64);
        let inside = z
            .iter()
            .zip(beta0.iter().zip(masses))
            .all(|(v, (b, m))| (b + radius * u * v / (norm * m.sqrt())).abs() <= amplitude);
        hits += inside as usize;
    }
    (hits as f64 / draws as f64, false)
}

pub fn ball_quotient(
    beta0: &[f64],
    masses: &[f64],
    amplitude: f64,
    r_outer: f64,
    r_inner: f64,
    draws: usize,
    seed: u64,
) -> Result<BallQuotient> {
    if beta0.is_empty() || beta0.len() != masses.len() {
        return Err(Error::DimensionMismatch {
            expected: beta0.len().max(1),
            got: masses.len(),
        });
    }
    if !(r_inner > 0.0 && r_outer >= r_inner) {
        return Err(Error::Precondition(
            "ball radii must satisfy 0 < r_inner ≤ r_outer".into(),
        ));
    }
    if masses.iter().any(|m| !(*m > 0.0)) || beta0.iter().any(|b| b.abs() > amplitude) {
        return Err(Error::Precondition(
            "cell masses must be positive and β₀ inside the cube".into(),
        ));
    }
    if draws == 0 {
        return Err(Error::BudgetZero);
    }
    let k = beta0.len();
    let (p_out, e_out) = inside_fraction(beta0, masses, amplitude, r_outer, draws, seed);
    let (p_in, e_in) = inside_fraction(beta0, masses, amplitude, r_inner, draws, seed);
    let log_volume_ratio = k as f64 * (r_outer / r_inner).ln();
    Ok(BallQuotient {
        cells: k,
        r_outer,
        r_inner,
        log_quotient: log_volume_ratio + p_out.ln() - p_in.ln(),
        log_volume_ratio,
        exact: e_out && e_in,
        draws,
    })
}

/// The shell quotient at multiplier j against the stated envelope j^{2K}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightQuotientRow {
    pub j: usize,
    pub quotient: BallQuotient,
    /// 2K·log j
    pub log_stated_bound: f64,
    pub within_stated: bool,
}

/// Π(‖β−β₀‖_* ≤ 3jε) / Π(‖β−β₀‖_* ≤ (b₁/2)ε) for each j in `js`.
pub fn weight_quotient_rows(
    beta0: &[f64],
    masses: &[f64],
    amplitude: f64,
    epsilon: f64,
    b1: f64,
    js: &[usize],
    draws: usize,
    seed: u64,
) -> Result<Vec<WeightQuotientRow>> {
    js.iter()
        .map(|&j| {
            let q = ball_quotient(
                beta0,
                masses,
                amplitude,
                3.0 * j as f64 * epsilon,
                b1 * epsilon / 2.0,
                draws,
                seed,
            )?;
            let log_stated_bound = 2.0 * beta0.len() as f64 * (j as f64).ln();
            Ok(WeightQuotientRow {
                j,
                within_stated: q.log_quotient <= log_stated_bound,
                log_stated_bound,
                quotient: q,
            })
        })
        .collect()
}

/// Per-n requirement b₃ Σ_{k<i≤n} θ₀ᵢ² ≤ εₙ²/2 at the configured c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub n: usize,
    pub k: usize,
    /// Smallest k meeting the requirement.
    pub k_required: usize,
    pub tail: f64,
    pub half_eps_sq: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussSeqCalibration {
    pub gamma: f64,
    pub b3: f64,
    pub c: f64,
    /// Smallest c with k = ⌊c·n^{1/(2γ+1)}⌋ meeting the requirement at every n.
    pub c_calibrated: f64,
    pub rows: Vec<TruncationRow>,
    /// The configured c is below the calibrated value.
    pub flagged: bool,
}

/// Truncation bias of the k-dimensional prior against θ₀ᵢ = i^{−(γ+1)}, with
/// εₙ = n^{−γ/(2γ+1)}.
pub fn calibrate_gauss_seq_c(
    gamma: f64,
    b3: f64,
    c: f64,
    n_grid: &[usize],
) -> Result<GaussSeqCalibration> {
    if !(gamma > 0.0) || !(b3 > 0.0) || !(c > 0.0) {
        return Err(Error::Precondition(
            "gamma, b3 and c must be positive".into(),
        ));
    }
    if n_grid.is_empty() || n_grid.contains(&0) {
        return Err(Error::Precondition(
            "n grid must be non-empty and positive".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    let mut c_calibrated = 0.0f64;
    for &n in n_grid {
        let nf = n as f64;
        let half_eps_sq = nf.powf(-2.0 * gamma / (2.0 * gamma + 1.0)) / 2.0;
        let sq: Vec<f64> = power_decay_truth(n, gamma)
            .iter()
            .map(|t| b3 * t * t)
            .collect();
        // suffix[k] = b₃ Σ_{i>k} θ₀ᵢ², summed from the small end
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + sq[i];
        }
        let k_required = (0..=n).find(|&k| suffix[k] <= half_eps_sq).unwrap_or(n);
        let scale = nf.powf(1.0 / (2.0 * gamma + 1.0));
        let k = ((c * scale).floor() as usize).clamp(1, n);
        c_calibrated = c_calibrated.max(k_required as f64 / scale);
        rows.push(TruncationRow {
            n,
            k,
            k_required,
            tail: suffix[k],
            half_eps_sq,
            pass: suffix[k] <= half_eps_sq,
        });
    }
    Ok(GaussSeqCalibration {
        gamma,
        b3,
        c,
        c_calibrated,
        flagged: rows.iter().any(|r| !r.pass),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contained_balls_give_the_volume_ratio() {
        let q = ball_quotient(&[0.0, 0.1], &[0.5, 0.5], 2.0, 0.3, 0.1, 100, 1).unwrap();
        assert!(q.exact);
        assert!((q.log_quotient - 2.0 * 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn clipping_in_one_dimension() {
        // K = 1, β₀ = 0, mass 1, M = 1: the cube keeps half of [−2, 2], so the quotient is 2/1
        let q = ball_quotient(&[0.0], &[1.0], 1.0, 2.0, 0.5, 20_000, 3).unwrap();
        assert!(!q.exact);
        assert!((q.log_quotient - 2f64.ln()).abs() < 0.03);
    }

    #[test]
    fn calibrated_c_is_tight() {
        let grid = [64, 256, 1024, 4096];
        let cal = calibrate_gauss_seq_c(1.0, 1.0, 1.0, &grid).unwrap();
        let at = calibrate_gauss_seq_c(1.0, 1.0, cal.c_calibrated * (1.0 + 1e-12), &grid).unwrap();
        assert!(!at.flagged);
        let below = calibrate_gauss_seq_c(1.0, 1.0, cal.c_calibrated * 0.99, &grid).unwrap();
        assert!(below.flagged);
    }
}

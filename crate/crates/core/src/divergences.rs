//! Hellinger-type distances, Kullback–Leibler moments and closed forms.
//!
//! H*(f,g)² = Σ (√f − √g)² ((2/3)√(f/g) + 1/3) satisfies
//! E_f[√(f/g)] = 1 + (3/2)·H*², which turns product likelihood moments
//! into products of per-coordinate factors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, NeumaierSum};

fn check_grid(f: &[f64], g: &[f64]) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::GridMismatch(f.len(), g.len()));
    }
    Ok(())
}

pub fn hellinger_sq(f: &[f64], g: &[f64]) -> Result<f64> {
    check_grid(f, g)?;
    Ok(compensated_sum(f.iter().zip(g).map(|(a, b)| {
        let d = a.sqrt() - b.sqrt();
        d * d
    })))
}

/// H(f,g) = ‖√f − √g‖₂.
pub fn hellinger(f: &[f64], g: &[f64]) -> Result<f64> {
    Ok(hellinger_sq(f, g)?.sqrt())
}

/// H*(f,g)²; +∞ when g vanishes somewhere f does not.
pub fn hellinger_star_sq(f: &[f64], g: &[f64]) -> Result<f64> {
    check_grid(f, g)?;
    let mut s = NeumaierSum::default();
    for (&a, &b) in f.iter().zip(g) {
        if a == 0.0 {
            s.add(b / 3.0);
        } else if b == 0.0 {
            return Ok(f64::INFINITY);
        } else {
            let d = a.sqrt() - b.sqrt();
            s.add(d * d * (2.0 / 3.0 * (a / b).sqrt() + 1.0 / 3.0));
        }
    }
    Ok(s.value())
}

pub fn hellinger_star(f: &[f64], g: &[f64]) -> Result<f64> {
    Ok(hellinger_star_sq(f, g)?.sqrt())
}

/// E_f[√(f/g)].
pub fn inverse_root_moment(f: &[f64], g: &[f64]) -> Result<f64> {
    check_grid(f, g)?;
    let mut s = NeumaierSum::default();
    for (&a, &b) in f.iter().zip(g) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        s.add(a * (a / b).sqrt());
    }
    Ok(s.value())
}

/// Hellinger affinity E_f[√(g/f)] = Σ √(fg).
pub fn affinity(f: &[f64], g: &[f64]) -> Result<f64> {
    check_grid(f, g)?;
    Ok(compensated_sum(
        f.iter().zip(g).map(|(a, b)| (a * b).sqrt()),
    ))
}

/// ‖f/g‖_∞ over the outcomes, reading 0/0 as 1.
pub fn sup_ratio(f: &[f64], g: &[f64]) -> Result<f64> {
    check_grid(f, g)?;
    let mut m: f64 = 0.0;
    for (&a, &b) in f.iter().zip(g) {
        let r = match (a == 0.0, b == 0.0) {
            (true, true) => 1.0,
            (false, true) => f64::INFINITY,
            _ => a / b,
        };
        m = m.max(r);
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub hellinger: f64,
    pub hellinger_star: f64,
    pub kl: f64,
    pub v_centered: BTreeMap<u32, f64>,
    pub v_raw: BTreeMap<u32, f64>,
    pub sup_ratio: f64,
}

/// Full report; K and V_k are +∞ when f is not absolutely continuous
/// with respect to g. Centered moments use a second pass around K.
pub fn kl_and_moments(f: &[f64], g: &[f64], ks: &[u32]) -> Result<DivergenceReport> {
    check_grid(f, g)?;
    let dominated = f.iter().zip(g).all(|(a, b)| *a == 0.0 || *b > 0.0);
    let mut v_raw = BTreeMap::new();
    let mut v_centered = BTreeMap::new();
    let kl = if dominated {
        let logs: Vec<(f64, f64)> = f
            .iter()
            .zip(g)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| (*a, (a / b).ln()))
            .collect();
        let kl = compensated_sum(logs.iter().map(|(a, l)| a * l));
        for &k in ks {
            let k_f = k as f64;
            v_raw.insert(
                k,
                compensated_sum(logs.iter().map(|(a, l)| a * l.abs().powf(k_f))),
            );
            v_centered.insert(
                k,
                compensated_sum(logs.iter().map(|(a, l)| a * (l - kl).abs().powf(k_f))),
            );
        }
        kl
    } else {
        for &k in ks {
            v_raw.insert(k, f64::INFINITY);
            v_centered.insert(k, f64::INFINITY);
        }
        f64::INFINITY
    };
    Ok(DivergenceReport {
        hellinger: hellinger(f, g)?,
        hellinger_star: hellinger_star(f, g)?,
        kl,
        v_centered,
        v_raw,
        sup_ratio: sup_ratio(f, g)?,
    })
}

/// d_n⁰: root mean square of coordinatewise Hellinger distances.
pub fn avg_hellinger(per_coord: &[(&[f64], &[f64])]) -> Result<f64> {
    if per_coord.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut s = NeumaierSum::default();
    for (f, g) in per_coord {
        s.add(hellinger_sq(f, g)?);
    }
    Ok((s.value() / per_coord.len() as f64).sqrt())
}

/// (1/n) Σ H*ᵢ², the quantity bounding W̄_n.
pub fn avg_hellinger_star_sq(per_coord: &[(&[f64], &[f64])]) -> Result<f64> {
    if per_coord.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut s = NeumaierSum::default();
    for (f, g) in per_coord {
        s.add(hellinger_star_sq(f, g)?);
    }
    Ok(s.value() / per_coord.len() as f64)
}

pub const PRODUCT_STATE_LIMIT: usize = 1_000_000;

/// Both sides of the product identities
/// 1 − H(∏f, ∏g)²/2 = ∏(1 − Hᵢ²/2) and 1 + (3/2)H*(∏f, ∏g)² = ∏(1 + (3/2)H*ᵢ²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductIdentity {
    pub hellinger: f64,
    pub hellinger_star: f64,
    pub joint_affinity: f64,
    pub factor_affinity: f64,
    pub joint_inverse_root: f64,
    pub factor_inverse_root: f64,
}

impl ProductIdentity {
    /// Largest discrepancy between the two sides, relative to max(1, |side|).
    pub fn max_discrepancy(&self) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        rel(self.joint_affinity, self.factor_affinity)
            .max(rel(self.joint_inverse_root, self.factor_inverse_root))
    }
}

/// Enumerates the tensor-product space (at most 10⁶ states) and evaluates both
/// sides of both product identities.
pub fn product_affinity_check(per_coord: &[(&[f64], &[f64])]) -> Result<ProductIdentity> {
    if per_coord.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut states = 1.0f64;
    for (f, g) in per_coord {
        check_grid(f, g)?;
        states *= f.len() as f64;
    }
    if states > PRODUCT_STATE_LIMIT as f64 {
        return Err(Error::StateSpaceTooLarge {
            states,
            limit: PRODUCT_STATE_LIMIT,
        });
    }
    let mut factor_affinity = 1.0;
    let mut factor_inverse_root = 1.0;
    for (f, g) in per_coord {
        factor_affinity *= 1.0 - 0.5 * hellinger_sq(f, g)?;
        factor_inverse_root *= 1.0 + 1.5 * hellinger_star_sq(f, g)?;
    }

    let d = per_coord.len();
    let mut idx = vec![0usize; d];
    let mut h2 = NeumaierSum::default();
    let mut hs2 = NeumaierSum::default();
    let mut dominated = true;
    loop {
        let (mut jf, mut jg) = (1.0, 1.0);
        for (k, (f, g)) in per_coord.iter().enumerate() {
            jf *= f[idx[k]];
            jg *= g[idx[k]];
        }
        let dr = jf.sqrt() - jg.sqrt();
        h2.add(dr * dr);
        if jf == 0.0 {
            hs2.add(jg / 3.0);
        } else if jg == 0.0 {
            dominated = false;
        } else {
            hs2.add(dr * dr * (2.0 / 3.0 * (jf / jg).sqrt() + 1.0 / 3.0));
        }
        let mut k = 0;
        loop {
            if k == d {
                let h2 = h2.value();
                let hs2 = if dominated {
                    hs2.value()
                } else {
                    f64::INFINITY
                };
                return Ok(ProductIdentity {
                    hellinger: h2.sqrt(),
                    hellinger_star: hs2.sqrt(),
                    joint_affinity: 1.0 - 0.5 * h2,
                    factor_affinity,
                    joint_inverse_root: 1.0 + 1.5 * hs2,
                    factor_inverse_root,
                });
            }
            idx[k] += 1;
            if idx[k] < per_coord[k].0.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Whether a semimetric value d satisfies d² ≤ −(2/n)·log(1 − H²/2) against
/// the joint Hellinger distance H of the n-fold laws.
pub fn satisfies_inequality_one(d: f64, joint_hellinger_sq: f64, n: usize) -> bool {
    let rhs = -(2.0 / n as f64) * (-0.5 * joint_hellinger_sq).ln_1p();
    d * d <= rhs * (1.0 + 1e-12) + 1e-15
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDivergence {
    pub quad_form: f64,
    pub hellinger_sq: f64,
    pub hellinger_star_sq: f64,
}

/// H² and H*² between N(μ, Σ) and N(μ + Δ, Σ) from q = ΔΣ⁻¹Δᵀ.
pub fn gaussian_closed_forms(
    delta: &[f64],
    precision: &DMatrix<f64>,
) -> Result<GaussianDivergence> {
    let d = delta.len();
    if precision.nrows() != d || precision.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: precision.nrows(),
        });
    }
    let scale = precision.amax().max(f64::MIN_POSITIVE);
    for i in 0..d {
        for j in 0..i {
            if (precision[(i, j)] - precision[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    if precision.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let v = nalgebra::DVector::from_column_slice(delta);
    let q = (v.transpose() * precision * &v)[(0, 0)];
    Ok(gaussian_from_quad_form(q))
}

pub fn gaussian_from_quad_form(q: f64) -> GaussianDivergence {
    GaussianDivergence {
        quad_form: q,
        hellinger_sq: -2.0 * (-q / 8.0).exp_m1(),
        hellinger_star_sq: 2.0 / 3.0 * (3.0 * q / 8.0).exp_m1(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonHstar {
    /// Truncated series for H*(Poi(a), Poi(b))².
    pub value: f64,
    /// C(L, U), truncated at the same length.
    pub bound_constant: f64,
    /// C(L, U)·(a − b)².
    pub bound: f64,
    /// Upper bound on the omitted series terms.
    pub tail_bound: f64,
}

pub const POISSON_TRUNC: usize = 60;

/// Truncated H* series between Poisson laws with rates in [L, U], with the
/// constant C(L, U) = e^{(U−3L)/2} Σ (U^{x/2} + x U^{x/2−1})² (U/L)^{x/2} / x!.
pub fn poisson_hstar_bound(
    a: f64,
    b: f64,
    lower: f64,
    upper: f64,
    trunc: usize,
) -> Result<PoissonHstar> {
    if !(lower > 0.0) || upper < lower {
        return Err(Error::OutOfRange {
            what: "L",
            value: lower,
            lo: f64::MIN_POSITIVE,
            hi: upper,
        });
    }
    for (what, v) in [("a", a), ("b", b)] {
        if v < lower || v > upper {
            return Err(Error::OutOfRange {
                what,
                value: v,
                lo: lower,
                hi: upper,
            });
        }
    }
    if trunc == 0 {
        return Err(Error::OutOfRange {
            what: "trunc",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut value = NeumaierSum::default();
    let mut constant = NeumaierSum::default();
    for x in 0..trunc {
        let xf = x as f64;
        let lf = ln_gamma(xf + 1.0);
        let u = (-a / 2.0 + xf / 2.0 * la - lf / 2.0).exp();
        let v = (-b / 2.0 + xf / 2.0 * lb - lf / 2.0).exp();
        let w = 2.0 / 3.0 * ((b - a) / 2.0 + xf / 2.0 * (la - lb)).exp() + 1.0 / 3.0;
        value.add((u - v) * (u - v) * w);
        let s = upper.powf(xf / 2.0) + xf * upper.powf(xf / 2.0 - 1.0);
        constant.add((2.0 * s.ln() + xf / 2.0 * (upper / lower).ln() - lf).exp());
    }
    let bound_constant = ((upper - 3.0 * lower) / 2.0).exp() * constant.value();
    let mut tail = NeumaierSum::default();
    let ratio_growth = ((upper - lower) / 2.0).exp();
    for x in trunc..trunc + 400 {
        let xf = x as f64;
        let lp = -lower + xf * upper.ln() - ln_gamma(xf + 1.0);
        let w = 2.0 / 3.0 * ratio_growth * (upper / lower).powf(xf / 2.0) + 1.0 / 3.0;
        tail.add(2.0 * (lp.exp()) * w);
    }
    Ok(PoissonHstar {
        value: value.value(),
        bound_constant,
        bound: bound_constant * (a - b) * (a - b),
        tail_bound: tail.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const F: [f64; 2] = [0.5, 0.5];
    const G: [f64; 2] = [0.25, 0.75];

    #[test]
    fn two_point_pair_values() {
        assert!((hellinger_sq(&F, &G).unwrap() - 0.068148).abs() < 1e-6);
        assert!((hellinger(&F, &G).unwrap() - 0.261052).abs() < 1e-6);
        assert!((hellinger_star_sq(&F, &G).unwrap() - 0.076903).abs() < 1e-6);
        assert!((inverse_root_moment(&F, &G).unwrap() - 1.115355).abs() < 1e-6);
        let r = kl_and_moments(&F, &G, &[2]).unwrap();
        assert!((r.kl - 0.143841).abs() < 1e-6);
        // Σ f (log(f/g) − K)² = 0.5·(log 2 − K)² + 0.5·(log(2/3) − K)²
        assert!((r.v_centered[&2] - 0.301737).abs() < 1e-6);
        assert!((r.sup_ratio - 2.0).abs() < 1e-15);
        assert!((r.hellinger_star - 0.277315).abs() < 1e-6);
        let h = r.hellinger;
        assert!((h / 3f64.sqrt() - 0.150719).abs() < 1e-6);
        assert!((2f64.powf(0.25) * h - 0.310445).abs() < 1e-6);
    }

    #[test]
    fn extreme_cases() {
        assert_eq!(hellinger(&F, &F).unwrap(), 0.0);
        assert!((hellinger(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            hellinger_star_sq(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(sup_ratio(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            hellinger(&F, &[1.0]),
            Err(Error::GridMismatch(2, 1))
        ));
        let r = kl_and_moments(&F, &F, &[1, 2, 3]).unwrap();
        assert_eq!(r.kl, 0.0);
        assert!(r
            .v_raw
            .values()
            .chain(r.v_centered.values())
            .all(|v| *v == 0.0));
        let r = kl_and_moments(&[0.5, 0.5], &[1.0, 0.0], &[2]).unwrap();
        assert_eq!(r.kl, f64::INFINITY);
    }

    #[test]
    fn avg_hellinger_definition() {
        assert!(matches!(avg_hellinger(&[]), Err(Error::EmptyList)));
        assert_eq!(
            avg_hellinger(&[(&F, &G)]).unwrap(),
            hellinger(&F, &G).unwrap()
        );
        // two pairs with H = 0.3 and 0.4: total variation style construction
        let p = |h2: f64| {
            // pair (1,0) vs (c, 1-c) has H² = 2 - 2√c
            let c = (1.0 - h2 / 2.0).powi(2);
            (vec![1.0, 0.0], vec![c, 1.0 - c])
        };
        let (a1, b1) = p(0.09);
        let (a2, b2) = p(0.16);
        let v = avg_hellinger(&[(&a1, &b1), (&a2, &b2)]).unwrap();
        assert!((v - 0.353553).abs() < 1e-6);
    }

    #[test]
    fn product_of_two_copies() {
        let r = product_affinity_check(&[(&F, &G), (&F, &G)]).unwrap();
        assert!((r.joint_inverse_root - 1.244017).abs() < 1e-6);
        assert!(r.max_discrepancy() < 1e-12);
        let r = product_affinity_check(&[(&F, &G), (&F, &F)]).unwrap();
        assert!((r.hellinger - hellinger(&F, &G).unwrap()).abs() < 1e-14);
        let big = vec![0.1; 10];
        let many: Vec<(&[f64], &[f64])> = (0..7).map(|_| (&big[..], &big[..])).collect();
        assert!(matches!(
            product_affinity_check(&many),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn gaussian_values() {
        let p = DMatrix::from_element(1, 1, 1.0);
        let g = gaussian_closed_forms(&[1.0], &p).unwrap();
        assert!((g.hellinger_sq - 0.235006).abs() < 1e-6);
        assert!((g.hellinger_star_sq - 0.303327).abs() < 1e-6);
        let z = gaussian_closed_forms(&[0.0], &p).unwrap();
        assert_eq!((z.hellinger_sq, z.hellinger_star_sq), (0.0, 0.0));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            gaussian_closed_forms(&[1.0, 0.0], &bad),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn diagonal_gaussian_factorizes() {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5]));
        let joint = gaussian_closed_forms(&[0.7, -1.3], &p).unwrap();
        let a = gaussian_from_quad_form(2.0 * 0.49);
        let b = gaussian_from_quad_form(0.5 * 1.69);
        let irm = (1.0 + 1.5 * a.hellinger_star_sq) * (1.0 + 1.5 * b.hellinger_star_sq);
        let aff = (1.0 - a.hellinger_sq / 2.0) * (1.0 - b.hellinger_sq / 2.0);
        assert!((1.0 + 1.5 * joint.hellinger_star_sq - irm).abs() < 1e-12);
        assert!((1.0 - joint.hellinger_sq / 2.0 - aff).abs() < 1e-12);
    }

    #[test]
    fn poisson_series_against_long_sum() {
        let r = poisson_hstar_bound(1.0, 1.5, 1.0, 2.0, 60).unwrap();
        let long = poisson_hstar_bound(1.0, 1.5, 1.0, 2.0, 200).unwrap();
        assert!((r.value - long.value).abs() < 1e-10);
        assert!(r.value <= r.bound_constant * 0.25);
        assert!(r.tail_bound < 1e-12);
        // direct pmf summation
        let pmf = |l: f64, x: usize| (-l + x as f64 * l.ln() - ln_gamma(x as f64 + 1.0)).exp();
        let f: Vec<f64> = (0..200).map(|x| pmf(1.0, x)).collect();
        let g: Vec<f64> = (0..200).map(|x| pmf(1.5, x)).collect();
        assert!((hellinger_star_sq(&f, &g).unwrap() - r.value).abs() < 1e-10);
        assert_eq!(
            poisson_hstar_bound(1.3, 1.3, 1.0, 2.0, 60).unwrap().value,
            0.0
        );
        assert!(poisson_hstar_bound(0.5, 1.5, 1.0, 2.0, 60).is_err());
    }

    #[test]
    fn inequality_one() {
        let h2 = 0.3;
        let d = (-(2.0 / 5.0) * (1.0f64 - h2 / 2.0).ln()).sqrt();
        assert!(satisfies_inequality_one(d, h2, 5));
        assert!(!satisfies_inequality_one(d * 1.01, h2, 5));
    }
}

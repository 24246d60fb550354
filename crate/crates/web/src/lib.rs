//! wasm-bindgen entry points for the static demo page in `www/`.
//! Every export takes plain strings/numbers and returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use contraction::divergences::{
    affinity, hellinger, hellinger_sq, hellinger_star, hellinger_star_sq, inverse_root_moment,
    sup_ratio,
};
use contraction::entropy::{hausdorff_constant, WeightedParameterSet};
use contraction::verifier::{gauss_seq_curve, GaussSeqCurveConfig};

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        })
        .collect()
}

fn normalised(s: &str) -> Result<Vec<f64>, String> {
    let v = parse_list(s)?;
    if v.iter().any(|x| !(*x >= 0.0)) {
        return Err("entries must be non-negative".into());
    }
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err("entries sum to zero".into());
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

fn to_json<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| format!(r#"{{"error":"{e}"}}"#)),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

#[derive(Serialize)]
struct DivergenceView {
    f: Vec<f64>,
    g: Vec<f64>,
    hellinger: f64,
    hellinger_star: f64,
    affinity: f64,
    inverse_root_moment: f64,
    sup_ratio: f64,
    /// |E_f√(f/g) − (1 + 1.5 H*²)|
    identity_error: f64,
    /// |E_f√(g/f) − (1 − H²/2)|
    affinity_error: f64,
    sandwich_lower: f64,
    sandwich_upper: f64,
}

/// Divergences between two pmfs given as comma/space separated weights
/// (normalised here).
#[wasm_bindgen]
pub fn divergences(f: &str, g: &str) -> String {
    to_json((|| {
        let f = normalised(f)?;
        let g = normalised(g)?;
        let e = |r: contraction::Result<f64>| r.map_err(|e| e.to_string());
        let h = e(hellinger(&f, &g))?;
        let sup = e(sup_ratio(&f, &g))?;
        let irm = e(inverse_root_moment(&f, &g))?;
        let aff = e(affinity(&f, &g))?;
        Ok(DivergenceView {
            hellinger: h,
            hellinger_star: e(hellinger_star(&f, &g))?,
            affinity: aff,
            inverse_root_moment: irm,
            sup_ratio: sup,
            identity_error: (irm - 1.0 - 1.5 * e(hellinger_star_sq(&f, &g))?).abs(),
            affinity_error: (aff - 1.0 + 0.5 * e(hellinger_sq(&f, &g))?).abs(),
            sandwich_lower: h / 3f64.sqrt(),
            sandwich_upper: sup.powf(0.25) * h,
            f,
            g,
        })
    })())
}

#[derive(Serialize)]
struct CurveView {
    n: Vec<usize>,
    epsilon_n: Vec<f64>,
    radius: Vec<f64>,
    tail_mass: Vec<f64>,
    slope: f64,
    slope_lower: f64,
    slope_upper: f64,
    predicted: f64,
}

/// Gaussian sequence rate curve on n = 2^6, 2^8, … up to 2^max_log2.
#[wasm_bindgen]
pub fn gauss_seq_rate(gamma: f64, replicates: u32, max_log2: u32, seed: u64) -> String {
    to_json((|| {
        if !(gamma > 0.0) || replicates == 0 || !(6..=14).contains(&max_log2) {
            return Err("need γ > 0, replicates ≥ 1 and 6 ≤ max log₂ n ≤ 14".to_string());
        }
        let cfg = GaussSeqCurveConfig {
            gamma,
            n_grid: (6..=max_log2).step_by(2).map(|k| 1usize << k).collect(),
            replicates: replicates as usize,
            draws: 200,
            ..Default::default()
        };
        if cfg.n_grid.len() < 2 {
            return Err("need at least two sample sizes".into());
        }
        let c = gauss_seq_curve(&cfg, seed).map_err(|e| e.to_string())?;
        let fit = c.slope_fit.ok_or("no slope fit")?;
        Ok(CurveView {
            n: c.n_grid,
            epsilon_n: c.epsilon_n,
            radius: c.q_radius,
            tail_mass: c.tail_mass,
            slope: fit.slope,
            slope_lower: fit.lower,
            slope_upper: fit.upper,
            predicted: c.predicted,
        })
    })())
}

#[derive(Serialize)]
struct ProfileRow {
    delta: f64,
    covering_number: usize,
    hausdorff_constant: f64,
    lower: f64,
    upper: f64,
    exact: bool,
}

/// Covering numbers and Hausdorff α-constants of weighted points on the line
/// over a δ grid.
#[wasm_bindgen]
pub fn hausdorff_profile(points: &str, weights: &str, alpha: f64, deltas: &str) -> String {
    to_json((|| {
        let pts = parse_list(points)?;
        let w = if weights.trim().is_empty() {
            vec![1.0; pts.len()]
        } else {
            parse_list(weights)?
        };
        if w.len() != pts.len() {
            return Err(format!("{} points but {} weights", pts.len(), w.len()));
        }
        if pts.len() > 40 {
            return Err("at most 40 points".into());
        }
        let total: f64 = w.iter().sum();
        if w.iter().any(|x| !(*x >= 0.0)) || !(total > 0.0) {
            return Err("weights must be non-negative with positive sum".into());
        }
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let set = WeightedParameterSet::from_metric((0..pts.len()).collect(), w, |i, j| {
            (pts[i] - pts[j]).abs()
        })
        .map_err(|e| e.to_string())?;
        parse_list(deltas)?
            .into_iter()
            .map(|delta| {
                let c = hausdorff_constant(&set, delta, alpha).map_err(|e| e.to_string())?;
                let lower = c.total_mass.powf(alpha);
                Ok(ProfileRow {
                    delta,
                    covering_number: c.covering_number,
                    hausdorff_constant: c.hausdorff_constant.unwrap_or(0.0),
                    lower,
                    upper: lower * (c.covering_number as f64).powf(1.0 - alpha),
                    exact: c.exact,
                })
            })
            .collect::<Result<Vec<_>, String>>()
    })())
}

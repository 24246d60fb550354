//! Entropy-versus-concentration conditions evaluated shell by shell.
//!
//! Shell j is {θ ∈ Θₙ : jεₙ < d(θ, θ₀) ≤ 2jεₙ}. The condition compares
//! C(ρ·jεₙ, shell, α)^{K₃} with e^{c₁j²nεₙ²} Π(neighbourhood)^α, in logs.

use serde::{Deserialize, Serialize};

use crate::entropy::{hausdorff_constant, shell, WeightedParameterSet};
use crate::error::{Error, Result};

use super::checks::CheckName;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellParams {
    pub epsilon_n: f64,
    pub n: usize,
    pub alpha: f64,
    pub k3: f64,
    pub c1: f64,
    /// Covering radius as a multiple of jεₙ (1 for the plain condition, δ for the Prop 2 form).
    pub radius_factor: f64,
    /// Prior mass of the concentration neighbourhood.
    pub neighborhood_mass: f64,
}

impl ShellParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::OutOfRange {
                what: "alpha",
                value: self.alpha,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !(self.epsilon_n > 0.0) || self.n == 0 {
            return Err(Error::Precondition(
                "shell condition needs εₙ > 0 and n ≥ 1".into(),
            ));
        }
        if !(self.k3 >= 0.0) || !(self.radius_factor > 0.0) {
            return Err(Error::Precondition(
                "K₃ must be ≥ 0 and the radius factor positive".into(),
            ));
        }
        if !(self.neighborhood_mass >= 0.0 && self.neighborhood_mass <= 1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                what: "neighbourhood mass",
                value: self.neighborhood_mass,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }

    pub fn n_eps_sq(&self) -> f64 {
        self.n as f64 * self.epsilon_n * self.epsilon_n
    }

    /// log of e^{c₁j²nεₙ²} Π(W)^α.
    pub fn log_rhs(&self, j: f64) -> f64 {
        self.c1 * j * j * self.n_eps_sq() + self.alpha * self.neighborhood_mass.ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub j: usize,
    pub points: usize,
    pub shell_mass: f64,
    pub hausdorff: f64,
    #[serde(with = "crate::numeric::extended_float")]
    pub log_lhs: f64,
    #[serde(with = "crate::numeric::extended_float")]
    pub log_rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellReport {
    pub name: CheckName,
    pub params: ShellParams,
    pub rows: Vec<ShellRow>,
    pub first_failure: Option<usize>,
}

impl ShellReport {
    pub fn all_pass(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn per_j(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.pass).collect()
    }
}

fn row(
    set: &WeightedParameterSet,
    j: usize,
    radius: f64,
    p: &ShellParams,
    jf: f64,
) -> Result<ShellRow> {
    let c = hausdorff_constant(set, radius, p.alpha)?
        .hausdorff_constant
        .unwrap_or(0.0);
    // C^{K₃} with 0⁰ = 1, so K₃ = 0 leaves only the concentration term
    let log_lhs = if p.k3 == 0.0 { 0.0 } else { p.k3 * c.ln() };
    let log_rhs = p.log_rhs(jf);
    Ok(ShellRow {
        j,
        points: set.len(),
        shell_mass: set.total_mass(),
        hausdorff: c,
        log_lhs,
        log_rhs,
        pass: log_lhs <= log_rhs + 1e-12,
    })
}

/// Per-shell evaluation for j = 2..=j_max; `d_to_truth` takes local indices of `sieve`.
pub fn check_shell_condition(
    sieve: &WeightedParameterSet,
    d_to_truth: impl Fn(usize) -> f64,
    params: ShellParams,
    j_max: usize,
) -> Result<ShellReport> {
    params.validate()?;
    let mut rows = Vec::new();
    for j in 2..=j_max {
        let jf = j as f64;
        let sh = shell(
            sieve,
            &d_to_truth,
            jf * params.epsilon_n,
            2.0 * jf * params.epsilon_n,
        );
        rows.push(row(
            &sh,
            j,
            params.radius_factor * jf * params.epsilon_n,
            &params,
            jf,
        )?);
    }
    let first_failure = rows.iter().find(|r| !r.pass).map(|r| r.j);
    Ok(ShellReport {
        name: CheckName::ShellCondition,
        params,
        rows,
        first_failure,
    })
}

/// Global form C(εₙ, Θₙ, α)^{K₃} ≤ e^{c₁nεₙ²} Π(W)^α, reported as a single row with j = 1.
pub fn check_global_condition(
    sieve: &WeightedParameterSet,
    params: ShellParams,
) -> Result<ShellReport> {
    params.validate()?;
    let r = row(
        sieve,
        1,
        params.radius_factor * params.epsilon_n,
        &params,
        1.0,
    )?;
    let first_failure = (!r.pass).then_some(1);
    Ok(ShellReport {
        name: CheckName::GlobalCondition,
        params,
        rows: vec![r],
        first_failure,
    })
}

/// Concentration inequality Π(W) ≥ e^{−(c₁j²/α)nεₙ²}, the K₃ = 0 case of shell j.
pub fn concentration_only(params: &ShellParams, j: usize) -> bool {
    let jf = j as f64;
    params.neighborhood_mass.ln()
        >= -(params.c1 * jf * jf / params.alpha) * params.n_eps_sq() - 1e-12 / params.alpha
}

/// Pseudoposterior prior condition Π(d > εₙ) ≤ e^{c₁nεₙ²} Π(W̄ₙ), in logs.
pub fn pseudoposterior_condition(far_mass: f64, wbar_mass: f64, c1: f64, n_eps_sq: f64) -> bool {
    far_mass == 0.0 || far_mass.ln() <= c1 * n_eps_sq + wbar_mass.ln() + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> WeightedParameterSet {
        WeightedParameterSet::from_metric((0..n).collect(), vec![1.0 / n as f64; n], |i, j| {
            (i as f64 - j as f64).abs() * 0.05
        })
        .unwrap()
    }

    fn params(k3: f64, mass: f64) -> ShellParams {
        ShellParams {
            epsilon_n: 0.1,
            n: 100,
            alpha: 0.5,
            k3,
            c1: 0.1,
            radius_factor: 1.0,
            neighborhood_mass: mass,
        }
    }

    #[test]
    fn k3_zero_is_pure_concentration() {
        let s = line(20);
        for mass in [1e-6, 1e-3, 0.01, 0.2] {
            let p = params(0.0, mass);
            let r = check_shell_condition(&s, |i| i as f64 * 0.05, p, 5).unwrap();
            assert_eq!(r.all_pass(), concentration_only(&p, 2), "mass {mass}");
        }
    }

    #[test]
    fn empty_shells_are_vacuous() {
        let s = line(3);
        let r = check_shell_condition(&s, |i| i as f64 * 0.05, params(1.0, 1e-30), 6).unwrap();
        // every shell with j ≥ 2 starts beyond 0.2, past the farthest point
        assert!(r.rows.iter().all(|row| row.points == 0 && row.pass));
        assert!(r.all_pass());
    }

    #[test]
    fn failing_shell_is_reported() {
        let s = line(20);
        let p = ShellParams {
            c1: 0.0,
            k3: 1.0,
            neighborhood_mass: 1e-4,
            ..params(1.0, 1.0)
        };
        let r = check_shell_condition(&s, |i| i as f64 * 0.05, p, 4).unwrap();
        assert_eq!(r.first_failure, Some(2));
        let g = check_global_condition(&s, p).unwrap();
        assert!(!g.all_pass());
    }
}

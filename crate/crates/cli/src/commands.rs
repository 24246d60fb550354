use std::path::Path;

use contraction::entropy::{hausdorff_constant, WeightedParameterSet};
use contraction::models::MarkovModel;
use contraction::neighborhoods::{prior_mass, NeighborhoodKind, NeighborhoodSpec, PriorSource};
use contraction::verifier::battery::find_instance;
use contraction::verifier::{
    ar_curve, builtin_instances, calibrate_gauss_seq_c, check_global_condition, check_lemma,
    check_prop0_prop3, check_prop2, check_prop4, check_shell_condition, discrete_curve,
    gauss_seq_curve, identity_suite, partition_condition, poisson_partition_instance, run_battery,
    ArCurveConfig, BoundSetup, CheckName, DiscreteCurveSpec, EvidenceLemma, FiniteMetric,
    GaussSeqCurveConfig, RateCurve, ShellParams,
};
use contraction::{DiscreteExperiment, ParameterId};

use crate::config::{
    check_in_range, finite_experiment, finite_weights, FiniteExperiment, RunConfig,
};
use crate::error::{CliError, Result};
use crate::plot::{loglog, Series};
use crate::records::{
    artifact, curves_csv, entropy_csv, read_jsonl, summary, write_jsonl, write_text,
    ContractSummary, EntropyRecord, Record,
};

pub const CHECKS_FILE: &str = "checks.jsonl";
pub const CURVES_FILE: &str = "curves.jsonl";
pub const ENTROPY_FILE: &str = "entropy.jsonl";

/// Runs one subcommand, writing its artifacts under `out`; returns whether every record passed.
pub fn run(command: &str, cfg: &RunConfig, out: &Path) -> Result<bool> {
    cfg.validate(command)?;
    if command != "report" {
        std::fs::create_dir_all(out).map_err(|source| CliError::Io {
            path: out.to_path_buf(),
            source,
        })?;
    }
    match command {
        "identity-suite" => {
            let records: Vec<Record> = identity_suite()?
                .into_iter()
                .map(Record::Identity)
                .collect();
            finish(out, CHECKS_FILE, "identity suite", &records)
        }
        "verify" => {
            let records = verify(cfg)?;
            finish(out, CHECKS_FILE, "bound checks", &records)
        }
        "contract" => contract(cfg, out),
        "entropy" => entropy(cfg, out),
        "report" => report(out),
        other => Err(CliError::config(format!("unknown command `{other}`"))),
    }
}

fn finish(out: &Path, file: &str, title: &str, records: &[Record]) -> Result<bool> {
    write_jsonl(&artifact(out, file), records)?;
    let stem = file.trim_end_matches(".jsonl");
    write_text(
        &artifact(out, &format!("summary_{stem}.md")),
        &summary(title, records),
    )?;
    Ok(records.iter().all(Record::passed))
}

fn verify(cfg: &RunConfig) -> Result<Vec<Record>> {
    let budget = cfg.mc_budget.unwrap_or(10_000);
    let mut records = Vec::new();
    if cfg.verify.checks.is_empty() {
        if cfg.experiment.name.is_some() {
            return Err(CliError::config(
                "`verify` on a named experiment needs [verify] checks",
            ));
        }
        let instances = if cfg.verify.instances.is_empty() {
            builtin_instances()
        } else {
            cfg.verify
                .instances
                .iter()
                .map(|id| {
                    find_instance(id).ok_or_else(|| CliError::RegistryMiss {
                        kind: "battery instance",
                        name: id.clone(),
                        known: builtin_instances()
                            .into_iter()
                            .map(|i| i.id)
                            .collect::<Vec<_>>()
                            .join(", "),
                    })
                })
                .collect::<Result<_>>()?
        };
        for seed in cfg.seeds() {
            for r in run_battery(&instances, budget, seed) {
                records.push(Record::BoundCheck(r?));
            }
        }
        return Ok(records);
    }
    let name = cfg.experiment.name.as_deref().unwrap_or("bernoulli-grid");
    let exp = finite_experiment(cfg, name)?;
    let weights = finite_weights(cfg, &exp)?;
    for seed in cfg.seeds() {
        for check in &cfg.verify.checks {
            records.push(run_check(cfg, &exp, &weights, check, budget, seed)?);
        }
    }
    Ok(records)
}

fn discrete_of(exp: &FiniteExperiment) -> Option<&DiscreteExperiment> {
    match exp {
        FiniteExperiment::Discrete(e) => Some(e),
        FiniteExperiment::Partition(p) => Some(&p.experiment),
        FiniteExperiment::Chain(_) => None,
    }
}

fn default_epsilon(exp: &FiniteExperiment) -> f64 {
    match exp {
        FiniteExperiment::Partition(p) => p.epsilon_n,
        _ => 0.25,
    }
}

fn run_check(
    cfg: &RunConfig,
    exp: &FiniteExperiment,
    weights: &[f64],
    check: &str,
    budget: usize,
    seed: u64,
) -> Result<Record> {
    let k = &cfg.constants;
    let n = cfg.experiment.n.unwrap_or(exp.default_n());
    let epsilon = cfg.experiment.epsilon.unwrap_or(default_epsilon(exp));
    if n == 0 {
        return Err(CliError::config("n must be positive"));
    }
    let theta1 = cfg.prior.theta1.as_deref();
    if let Some(&bad) = theta1.and_then(|t| t.iter().find(|&&i| i >= weights.len())) {
        return Err(CliError::config(format!(
            "theta1 index {bad} exceeds the {} parameters",
            weights.len()
        )));
    }
    let setup = BoundSetup {
        weights,
        theta1,
        n,
        epsilon,
        mc_budget: budget,
        seed,
        slack_sigmas: cfg.slack(),
    };
    let alpha = k.alpha.unwrap_or(if check == "prop4" { 0.25 } else { 0.5 });
    let beta = k.beta.unwrap_or(0.5);
    let c = k.c.unwrap_or(1.0);
    let wrong_shape = |what: &str| CliError::config(format!("`{check}` needs {what}"));
    let record = match check {
        "prop4" | "lemma5" => {
            let FiniteExperiment::Chain(chain) = exp else {
                return Err(wrong_shape("a Markov chain experiment (two-state-chain)"));
            };
            let cap = chain.bounds().delta_cap();
            if check == "prop4" {
                check_in_range("alpha", alpha, 0.0, 0.5, "Prop 4 requires 0 < α < 1/2")?;
                let delta = match (k.delta, k.delta_fraction) {
                    (Some(d), _) => d,
                    (None, f) => {
                        let f = f.unwrap_or(0.5);
                        check_in_range(
                            "delta_fraction",
                            f,
                            0.0,
                            1.0,
                            "δ is a fraction of its cap √a₀/(2√a₁)",
                        )?;
                        f * cap
                    }
                };
                check_in_range(
                    "delta",
                    delta,
                    0.0,
                    cap,
                    "Prop 4 requires 0 < δ < √a₀/(2√a₁)",
                )?;
                Record::BoundCheck(check_prop4(chain, &setup, alpha, delta)?)
            } else {
                Record::BoundCheck(check_lemma(
                    chain,
                    &setup,
                    EvidenceLemma::Lemma5 {
                        a1: chain.bounds().a1,
                    },
                    c,
                )?)
            }
        }
        "prop2" | "prop0" | "prop3" | "lemma2" | "lemma4" => {
            let d = discrete_of(exp).ok_or_else(|| wrong_shape("a product experiment"))?;
            let metric = FiniteMetric::average_hellinger(d, n);
            match check {
                "prop2" => {
                    let delta = k.delta.unwrap_or(0.25);
                    check_in_range("delta", delta, 0.0, 0.5, "Prop 2 requires 0 < δ < 1/2")?;
                    check_in_range("alpha", alpha, 0.0, 1.0, "Prop 2 requires 0 < α < 1")?;
                    Record::BoundCheck(check_prop2(d, &metric, &setup, alpha, delta)?)
                }
                "prop0" | "prop3" => {
                    check_in_range("alpha", alpha, 0.0, 1.0, "Props 0/3 require 0 < α < 1")?;
                    let name = if check == "prop0" {
                        CheckName::Prop0
                    } else {
                        CheckName::Prop3
                    };
                    Record::BoundCheck(check_prop0_prop3(d, &metric, &setup, alpha, beta, name)?)
                }
                "lemma2" => Record::BoundCheck(check_lemma(d, &setup, EvidenceLemma::Lemma2, c)?),
                _ => Record::BoundCheck(check_lemma(d, &setup, EvidenceLemma::Lemma4 { beta }, c)?),
            }
        }
        "shell_condition" | "global_condition" => {
            check_in_range(
                "alpha",
                alpha,
                0.0,
                1.0,
                "the Hausdorff entropy needs 0 < α < 1",
            )?;
            let c1 = k.c1.unwrap_or(0.25);
            let j_max = k.j_max.unwrap_or(6);
            if let (FiniteExperiment::Partition(inst), "shell_condition") = (exp, check) {
                return Ok(Record::Partition(partition_condition(
                    inst, alpha, c1, j_max,
                )?));
            }
            let d = discrete_of(exp).ok_or_else(|| wrong_shape("a product experiment"))?;
            let metric = FiniteMetric::average_hellinger(d, n);
            let p = weights.len();
            let points: Vec<ParameterId> = (0..p).map(ParameterId).collect();
            let spec = NeighborhoodSpec::new(NeighborhoodKind::WBar, epsilon, n)?;
            let mass = prior_mass(
                &spec,
                d,
                PriorSource::Finite {
                    points: &points,
                    weights,
                },
                1,
                seed,
            )?
            .estimate;
            let ids: Vec<usize> = match theta1 {
                Some(t) => t.to_vec(),
                None => (0..p).collect(),
            };
            let set = WeightedParameterSet::from_metric(
                ids.clone(),
                ids.iter().map(|&i| weights[i]).collect(),
                |a, b| metric.distance(ids[a], ids[b]),
            )?;
            let t0 = contraction::verifier::FiniteModel::truth_index(d);
            let params = ShellParams {
                epsilon_n: epsilon,
                n,
                alpha,
                k3: k.k3.unwrap_or(1.0),
                c1,
                radius_factor: k.delta.unwrap_or(1.0),
                neighborhood_mass: mass,
            };
            if check == "shell_condition" {
                Record::Shell(check_shell_condition(
                    &set,
                    |i| metric.distance(ids[i], t0),
                    params,
                    j_max,
                )?)
            } else {
                Record::Shell(check_global_condition(&set, params)?)
            }
        }
        other => return Err(CliError::config(format!("unknown check `{other}`"))),
    };
    Ok(record)
}

fn contract(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let name = cfg.experiment.name.as_deref().unwrap_or("gauss-seq");
    let r_sweep = cfg
        .constants
        .r
        .clone()
        .unwrap_or_else(|| vec![2.0, 4.0, 8.0]);
    let replicates = cfg.constants.replicates;
    let quantile = cfg.constants.quantile.unwrap_or(0.9);
    if replicates == Some(0) {
        return Err(CliError::config("replicates must be positive"));
    }
    let prior = cfg.prior.name.as_deref();
    let mut records = Vec::new();
    let mut predicted = -1.0 / 3.0;
    // Σ = I/n gives b₃ = 1; a c below the calibrated value is flagged, not failed
    let calibration = match name {
        "gauss-seq" => {
            let d = GaussSeqCurveConfig::default();
            Some(calibrate_gauss_seq_c(
                cfg.experiment.gamma.unwrap_or(d.gamma),
                1.0,
                cfg.experiment.c.unwrap_or(d.c),
                cfg.n_grid.as_deref().unwrap_or(&d.n_grid),
            )?)
        }
        _ => None,
    };
    for seed in cfg.seeds() {
        let mut curves: Vec<RateCurve> = Vec::new();
        for &r in &r_sweep {
            let curve = match name {
                "gauss-seq" => {
                    if !matches!(prior, None | Some("gauss-seq")) {
                        return Err(CliError::config(
                            "gauss-seq uses the conjugate `gauss-seq` prior",
                        ));
                    }
                    let d = GaussSeqCurveConfig::default();
                    gauss_seq_curve(
                        &GaussSeqCurveConfig {
                            gamma: cfg.experiment.gamma.unwrap_or(d.gamma),
                            c: cfg.experiment.c.unwrap_or(d.c),
                            n_grid: cfg.n_grid.clone().unwrap_or(d.n_grid),
                            replicates: replicates.unwrap_or(d.replicates),
                            draws: cfg.experiment.draws.unwrap_or(d.draws),
                            quantile,
                            r,
                        },
                        seed,
                    )?
                }
                "ar" => {
                    if !matches!(prior, None | Some("step-uniform")) {
                        return Err(CliError::config("ar uses the `step-uniform` prior"));
                    }
                    let d = ArCurveConfig::default();
                    ar_curve(
                        &ArCurveConfig {
                            amplitude: cfg.experiment.amplitude.unwrap_or(d.amplitude),
                            max_cells: cfg.experiment.max_cells.unwrap_or(d.max_cells),
                            n_grid: cfg.n_grid.clone().unwrap_or(d.n_grid),
                            replicates: replicates.unwrap_or(d.replicates),
                            budget: cfg.mc_budget.unwrap_or(d.budget),
                            r,
                            bins: cfg.experiment.bins.unwrap_or(d.bins),
                        },
                        seed,
                    )?
                }
                "bernoulli-grid" | "inid-grid" | "poisson-regression" => {
                    discrete_contract(cfg, name, r, quantile, seed)?
                }
                other => {
                    return Err(CliError::config(format!(
                        "`contract` is not available for `{other}`"
                    )))
                }
            };
            curves.push(curve);
        }
        predicted = curves[0].predicted;
        let smallest = curves
            .iter()
            .filter(|c| c.decay.strictly_decreasing)
            .map(|c| c.config.r)
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))));
        let slope = curves[0].slope_fit.map(|s| s.slope);
        let tol = (name == "gauss-seq").then(|| cfg.constants.slope_tolerance.unwrap_or(0.07));
        let pass = match (slope, tol) {
            (Some(s), Some(t)) => (s - predicted).abs() <= t,
            _ => smallest.is_some(),
        };
        if seed == cfg.seeds()[0] {
            write_text(
                &artifact(out, &format!("rate_{name}.svg")),
                &rate_plot(name, &curves),
            )?;
        }
        records.extend(curves.into_iter().map(Record::Curve));
        records.push(Record::Contract(ContractSummary {
            experiment: name.to_string(),
            seed,
            r_sweep: r_sweep.clone(),
            smallest_passing_r: smallest,
            slope,
            predicted,
            slope_tolerance: tol,
            pass,
            calibration: calibration.clone(),
        }));
    }
    let curves: Vec<&RateCurve> = records
        .iter()
        .filter_map(|r| match r {
            Record::Curve(c) => Some(c),
            _ => None,
        })
        .collect();
    write_text(&artifact(out, "curves.csv"), &curves_csv(&curves))?;
    finish(
        out,
        CURVES_FILE,
        &format!("contraction: {name} (predicted exponent {predicted:.4})"),
        &records,
    )
}

fn discrete_contract(
    cfg: &RunConfig,
    name: &str,
    r: f64,
    quantile: f64,
    seed: u64,
) -> Result<RateCurve> {
    let exp = finite_experiment(cfg, name)?;
    let weights = finite_weights(cfg, &exp)?;
    let cells = cfg.experiment.cells.unwrap_or(20);
    let poisson = name == "poisson-regression";
    let fixed = match &exp {
        FiniteExperiment::Discrete(d) => Some(d.clone()),
        _ => None,
    };
    let family = move |n: usize| -> contraction::Result<DiscreteExperiment> {
        match &fixed {
            Some(d) => Ok(d.clone()),
            None => Ok(poisson_partition_instance(n, cells)?.experiment),
        }
    };
    let epsilon = move |n: usize| {
        let nf = n as f64;
        if poisson {
            nf.powf(-1.0 / 3.0)
        } else {
            (nf.ln() / nf).sqrt()
        }
    };
    let spec = DiscreteCurveSpec {
        family: &family,
        weights: &weights,
        epsilon: &epsilon,
        beta: cfg.experiment.beta,
        n_grid: cfg
            .n_grid
            .clone()
            .unwrap_or_else(|| vec![20, 40, 80, 160, 320]),
        r,
        replicates: cfg.constants.replicates.unwrap_or(20),
        quantile,
    };
    Ok(discrete_curve(&spec, seed)?)
}

fn rate_plot(name: &str, curves: &[RateCurve]) -> String {
    let first = &curves[0];
    let ns: Vec<f64> = first.n_grid.iter().map(|n| *n as f64).collect();
    let mut series = Vec::new();
    if !first.q_radius.is_empty() {
        series.push(Series {
            name: "median radius".into(),
            points: ns
                .iter()
                .copied()
                .zip(first.q_radius.iter().copied())
                .collect(),
            dashed: false,
        });
        if let Some(fit) = first.slope_fit {
            series.push(Series {
                name: format!("fit slope {:.3}", fit.slope),
                points: ns
                    .iter()
                    .map(|n| (*n, (fit.intercept + fit.slope * n.ln()).exp()))
                    .collect(),
                dashed: true,
            });
        }
        let anchor = first.q_radius[0] / ns[0].powf(first.predicted);
        series.push(Series {
            name: format!("predicted {:.3}", first.predicted),
            points: ns
                .iter()
                .map(|n| (*n, anchor * n.powf(first.predicted)))
                .collect(),
            dashed: true,
        });
        loglog(&format!("{name}: posterior radius"), "n", "radius", &series)
    } else {
        for c in curves {
            series.push(Series {
                name: format!("tail mass r={}", c.config.r),
                points: ns
                    .iter()
                    .copied()
                    .zip(c.tail_mass.iter().copied())
                    .collect(),
                dashed: false,
            });
        }
        loglog(
            &format!("{name}: posterior tail mass"),
            "n",
            "tail mass",
            &series,
        )
    }
}

fn entropy(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let name = cfg.experiment.name.as_deref().unwrap_or("bernoulli-grid");
    let exp = finite_experiment(cfg, name)?;
    let weights = finite_weights(cfg, &exp)?;
    let n = cfg.experiment.n.unwrap_or(exp.default_n());
    let alpha = cfg.constants.alpha.unwrap_or(0.5);
    check_in_range(
        "alpha",
        alpha,
        0.0,
        1.0,
        "the Hausdorff entropy needs 0 < α < 1",
    )?;
    let deltas = cfg
        .entropy
        .deltas
        .clone()
        .unwrap_or_else(|| vec![0.02, 0.05, 0.1, 0.2, 0.4]);
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(CliError::config("deltas must be positive"));
    }
    let metric = match &exp {
        FiniteExperiment::Chain(c) => FiniteMetric::transition_hellinger(c),
        other => {
            FiniteMetric::average_hellinger(discrete_of(other).expect("product experiment"), n)
        }
    };
    let ids: Vec<usize> = match &cfg.prior.theta1 {
        Some(t) => t.clone(),
        None => (0..weights.len()).collect(),
    };
    if let Some(&bad) = ids.iter().find(|&&i| i >= weights.len()) {
        return Err(CliError::config(format!(
            "theta1 index {bad} exceeds the {} parameters",
            weights.len()
        )));
    }
    let set = WeightedParameterSet::from_metric(
        ids.clone(),
        ids.iter().map(|&i| weights[i]).collect(),
        |a, b| metric.distance(ids[a], ids[b]),
    )?;
    let mut records = Vec::new();
    for &delta in &deltas {
        let cert = hausdorff_constant(&set, delta, alpha)?;
        let lower = cert.total_mass.powf(alpha);
        let upper = lower * (cert.covering_number as f64).powf(1.0 - alpha);
        let c = cert.hausdorff_constant.unwrap_or(0.0);
        records.push(Record::Entropy(EntropyRecord {
            experiment: name.to_string(),
            metric: metric.name.clone(),
            delta,
            alpha,
            points: set.len(),
            covering_number: cert.covering_number,
            hausdorff_constant: c,
            lower,
            upper,
            exact: cert.exact,
            pass: cert.sandwich_holds(1e-12),
        }));
    }
    let rows: Vec<&EntropyRecord> = records
        .iter()
        .filter_map(|r| match r {
            Record::Entropy(e) => Some(e),
            _ => None,
        })
        .collect();
    write_text(&artifact(out, "entropy.csv"), &entropy_csv(&rows))?;
    write_text(&artifact(out, "entropy.svg"), &entropy_plot(name, &rows))?;
    finish(
        out,
        ENTROPY_FILE,
        &format!("Hausdorff entropy: {name}"),
        &records,
    )
}

fn entropy_plot(name: &str, rows: &[&EntropyRecord]) -> String {
    let series = vec![
        Series {
            name: "C(δ)".into(),
            points: rows
                .iter()
                .map(|e| (e.delta, e.hausdorff_constant))
                .collect(),
            dashed: false,
        },
        Series {
            name: "N(δ)".into(),
            points: rows
                .iter()
                .map(|e| (e.delta, e.covering_number as f64))
                .collect(),
            dashed: false,
        },
        Series {
            name: "Π^α N^{1−α}".into(),
            points: rows.iter().map(|e| (e.delta, e.upper)).collect(),
            dashed: true,
        },
    ];
    loglog(&format!("{name}: entropy profile"), "δ", "value", &series)
}

/// Re-reads every record file in `dir`, re-validates it and writes `report.md`.
fn report(dir: &Path) -> Result<bool> {
    let mut records = Vec::new();
    let mut found = Vec::new();
    for file in [CHECKS_FILE, CURVES_FILE, ENTROPY_FILE] {
        let path = artifact(dir, file);
        if path.exists() {
            records.extend(read_jsonl(&path)?);
            found.push(file);
        }
    }
    if found.is_empty() {
        return Err(CliError::config(format!(
            "no record files in {}",
            dir.display()
        )));
    }
    let violations: Vec<String> = records
        .iter()
        .filter_map(|r| {
            r.invariant_violation()
                .map(|v| format!("{}: {v}", r.label()))
        })
        .collect();
    let mut text = summary(&format!("report over {}", found.join(", ")), &records);
    if !violations.is_empty() {
        text.push_str("\n## Invariant violations\n\n");
        for v in &violations {
            text.push_str(&format!("- {v}\n"));
        }
    }
    write_text(&artifact(dir, "report.md"), &text)?;
    let curves: Vec<RateCurve> = records
        .iter()
        .filter_map(|r| match r {
            Record::Curve(c) => Some(c.clone()),
            _ => None,
        })
        .collect();
    if !curves.is_empty() {
        write_text(
            &artifact(dir, "report_rate.svg"),
            &rate_plot("report", &curves),
        )?;
    }
    Ok(violations.is_empty() && records.iter().all(Record::passed))
}

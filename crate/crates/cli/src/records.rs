//! Result records: one JSON object per line, tagged by `record`.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use contraction::verifier::{
    BoundCheck, GaussSeqCalibration, IdentityRecord, PartitionConditionReport, RateCurve,
    ShellReport,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    pub experiment: String,
    pub metric: String,
    pub delta: f64,
    pub alpha: f64,
    pub points: usize,
    pub covering_number: usize,
    pub hausdorff_constant: f64,
    /// Π^α
    pub lower: f64,
    /// Π^α N^{1−α}
    pub upper: f64,
    pub exact: bool,
    pub pass: bool,
}

/// Outcome of a contraction run over an r sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSummary {
    pub experiment: String,
    pub seed: u64,
    pub r_sweep: Vec<f64>,
    /// Smallest r whose median tail masses strictly decrease in n.
    pub smallest_passing_r: Option<f64>,
    pub slope: Option<f64>,
    pub predicted: f64,
    pub slope_tolerance: Option<f64>,
    pub pass: bool,
    /// Gaussian sequence only: the configured c against its calibrated lower value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<GaussSeqCalibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    BoundCheck(BoundCheck),
    Shell(ShellReport),
    Partition(PartitionConditionReport),
    Identity(IdentityRecord),
    Curve(RateCurve),
    Contract(ContractSummary),
    Entropy(EntropyRecord),
}

impl Record {
    pub fn passed(&self) -> bool {
        match self {
            Record::BoundCheck(c) => c.passed(),
            Record::Shell(s) => s.all_pass(),
            Record::Partition(p) => p.passed(),
            Record::Identity(i) => i.pass,
            Record::Curve(_) => true,
            Record::Contract(c) => c.pass,
            Record::Entropy(e) => e.pass,
        }
    }

    /// Declared invariants of the record type.
    pub fn invariant_violation(&self) -> Option<String> {
        match self {
            Record::BoundCheck(c) if !c.is_consistent() => {
                Some("verdict disagrees with lhs ≤ rhs + slack·stderr".into())
            }
            Record::Curve(c) if !c.is_valid() => {
                Some("curve has a non-increasing grid or tail mass outside [0, 1]".into())
            }
            Record::Shell(s) => {
                let first = s.rows.iter().find(|r| !r.pass).map(|r| r.j);
                (first != s.first_failure)
                    .then(|| "first_failure does not match the per-shell rows".into())
            }
            Record::Entropy(e)
                if e.pass
                    != (e.hausdorff_constant >= e.lower * (1.0 - 1e-12) - 1e-12
                        && e.hausdorff_constant <= e.upper * (1.0 + 1e-12) + 1e-12) =>
            {
                Some("pass flag disagrees with the sandwich".into())
            }
            Record::Identity(i) if i.pass != (i.abs_error <= 1e-12 * i.lhs.abs().max(1.0)) => {
                Some("pass flag disagrees with the identity error".into())
            }
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Record::BoundCheck(c) => format!("{} {}", c.name.as_str(), c.config.model),
            Record::Shell(s) => format!("{} eps={}", s.name.as_str(), s.params.epsilon_n),
            Record::Partition(p) => format!("partition_condition cells={} n={}", p.cells, p.n),
            Record::Identity(i) => format!("{} {}", i.identity, i.instance),
            Record::Curve(c) => format!("curve {} r={}", c.label, c.config.r),
            Record::Contract(c) => match &c.calibration {
                Some(cal) => format!(
                    "contract {} seed={} c={} calibrated c={:.4}{}",
                    c.experiment,
                    c.seed,
                    cal.c,
                    cal.c_calibrated,
                    if cal.flagged { " FLAGGED" } else { "" }
                ),
                None => format!("contract {} seed={}", c.experiment, c.seed),
            },
            Record::Entropy(e) => format!("entropy {} delta={}", e.experiment, e.delta),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_jsonl(path: &Path, records: &[Record]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialise");
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&out).map_err(io_err(path))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn curves_csv(curves: &[&RateCurve]) -> String {
    let mut s = String::from("label,r,n,epsilon_n,tail_mass,q_radius\n");
    for c in curves {
        for (i, n) in c.n_grid.iter().enumerate() {
            let q = c
                .q_radius
                .get(i)
                .map(|v| format!("{v:e}"))
                .unwrap_or_default();
            s.push_str(&format!(
                "\"{}\",{},{},{:e},{:e},{}\n",
                c.label, c.config.r, n, c.epsilon_n[i], c.tail_mass[i], q
            ));
        }
    }
    s
}

pub fn entropy_csv(rows: &[&EntropyRecord]) -> String {
    let mut s = String::from(
        "experiment,delta,alpha,points,covering_number,hausdorff_constant,lower,upper,exact,pass\n",
    );
    for e in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{:e},{},{}\n",
            e.experiment,
            e.delta,
            e.alpha,
            e.points,
            e.covering_number,
            e.hausdorff_constant,
            e.lower,
            e.upper,
            e.exact,
            e.pass
        ));
    }
    s
}

pub fn summary(title: &str, records: &[Record]) -> String {
    let failed: Vec<&Record> = records.iter().filter(|r| !r.passed()).collect();
    let mut s = format!(
        "# {title}\n\n{} records, {} failing\n\n",
        records.len(),
        failed.len()
    );
    for r in records {
        s.push_str(&format!(
            "- [{}] {}\n",
            if r.passed() { "pass" } else { "FAIL" },
            r.label()
        ));
    }
    if !failed.is_empty() {
        s.push_str("\n## Failing records\n\n");
        for r in failed {
            s.push_str(&format!(
                "{}\n",
                serde_json::to_string(r).expect("records serialise")
            ));
        }
    }
    s
}

pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

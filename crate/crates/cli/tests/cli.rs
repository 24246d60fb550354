use std::path::Path;
use std::process::Command;

use contraction_cli::records::{read_jsonl, Record};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_contraction"));
    c.env_remove("CONTRACTION_JOBS");
    c
}

fn run(args: &[&str], dir: &Path) -> i32 {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn identity_suite_passes_with_round_trip() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["identity-suite", "--out", "o"], d.path()), 0);
    let recs = read_jsonl(&d.path().join("o/checks.jsonl")).unwrap();
    assert!(recs.len() >= 40);
    for r in &recs {
        assert!(matches!(r, Record::Identity(_)));
        assert!(r.passed() && r.invariant_violation().is_none());
    }
    assert!(d.path().join("o/summary_checks.md").exists());
}

#[test]
fn prop2_delta_precondition_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "[experiment]\nname = \"bernoulli-grid\"\n[constants]\ndelta = 0.5\n[verify]\nchecks = [\"prop2\"]\n",
    );
    let out = bin()
        .args(["verify", "--config", &cfg, "--out", "o"])
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("δ < 1/2"), "{err}");
}

#[test]
fn unknown_names_and_malformed_config_exit_two() {
    let d = tempfile::tempdir().unwrap();
    let miss = write(d.path(), "m.toml", "[experiment]\nname = \"nope\"\n");
    assert_eq!(run(&["entropy", "--config", &miss], d.path()), 2);
    let typo = write(d.path(), "t.toml", "[constants]\nalhpa = 0.5\n");
    assert_eq!(run(&["verify", "--config", &typo], d.path()), 2);
    let wrong = write(d.path(), "w.toml", "command = \"contract\"\n");
    assert_eq!(run(&["verify", "--config", &wrong], d.path()), 2);
    assert_eq!(run(&["report", "--out", "empty"], d.path()), 2);
}

#[test]
fn failing_checks_exit_one() {
    // no fitted slope lands within 1e-9 of the prediction
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "n_grid = [64, 256, 1024]\n[constants]\nreplicates = 4\nr = [2.0]\nslope_tolerance = 1e-9\n",
    );
    assert_eq!(
        run(&["contract", "--config", &cfg, "--out", "o"], d.path()),
        1
    );
    assert_eq!(run(&["report", "--out", "o"], d.path()), 1);
}

#[test]
fn contract_gauss_seq_populates_slope_and_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "n_grid = [64, 256, 1024, 4096]\n[constants]\nreplicates = 8\n",
    );
    assert_eq!(
        run(&["contract", "--config", &cfg, "--out", "o"], d.path()),
        0
    );
    let recs = read_jsonl(&d.path().join("o/curves.jsonl")).unwrap();
    let curve = recs
        .iter()
        .find_map(|r| match r {
            Record::Curve(c) => Some(c),
            _ => None,
        })
        .unwrap();
    assert!(curve.slope_fit.is_some());
    assert!(curve.is_valid());
    let cal = recs
        .iter()
        .find_map(|r| match r {
            Record::Contract(c) => c.calibration.clone(),
            _ => None,
        })
        .unwrap();
    assert!((cal.c_calibrated - 0.5).abs() < 1e-12 && !cal.flagged);
    let csv = std::fs::read_to_string(d.path().join("o/curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    let svg = std::fs::read_to_string(d.path().join("o/rate_gauss-seq.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("predicted"));
    assert_eq!(run(&["report", "--out", "o"], d.path()), 0);
}

#[test]
fn verify_partition_instance() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "mc_budget = 2000\n[experiment]\nname = \"poisson-regression\"\nn = 40\ncells = 20\n\
         [verify]\nchecks = [\"prop3\", \"lemma4\", \"shell_condition\"]\n",
    );
    assert_eq!(
        run(&["verify", "--config", &cfg, "--out", "o"], d.path()),
        0
    );
    let recs = read_jsonl(&d.path().join("o/checks.jsonl")).unwrap();
    assert!(matches!(recs[2], Record::Partition(_)));
}

#[test]
fn identical_configs_give_identical_records() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(
        d.path(),
        "c.toml",
        "seeds = [5, 6]\nmc_budget = 3000\n[verify]\ninstances = [\"prop2-bernoulli-a0.5\", \"prop4-chain-half-cap\", \"lemma5-chain\"]\n",
    );
    assert_eq!(
        run(&["verify", "--config", &cfg, "--out", "a"], d.path()),
        0
    );
    assert_eq!(
        run(
            &["verify", "--config", &cfg, "--out", "b", "--jobs", "1"],
            d.path()
        ),
        0
    );
    let out = bin()
        .args(["verify", "--config", &cfg, "--out", "c"])
        .env("CONTRACTION_JOBS", "3")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read(d.path().join("a/checks.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b/checks.jsonl")).unwrap());
    assert_eq!(a, std::fs::read(d.path().join("c/checks.jsonl")).unwrap());
    assert_eq!(
        read_jsonl(&d.path().join("a/checks.jsonl")).unwrap().len(),
        6
    );
}

#[test]
fn bad_job_count_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["identity-suite", "--out", "o"])
        .env("CONTRACTION_JOBS", "many")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn entropy_profile_and_ar_curve() {
    let d = tempfile::tempdir().unwrap();
    let e = write(
        d.path(),
        "e.toml",
        "[experiment]\nname = \"inid-grid\"\nn = 10\n[entropy]\ndeltas = [0.05, 0.3]\n",
    );
    assert_eq!(run(&["entropy", "--config", &e, "--out", "o"], d.path()), 0);
    let recs = read_jsonl(&d.path().join("o/entropy.jsonl")).unwrap();
    assert_eq!(recs.len(), 2);

    let ar = write(
        d.path(),
        "ar.toml",
        "mc_budget = 4000\nn_grid = [50, 400]\n[experiment]\nname = \"ar\"\n[constants]\nreplicates = 3\nr = [4.0]\n",
    );
    assert_eq!(
        run(&["contract", "--config", &ar, "--out", "p"], d.path()),
        0
    );
    assert!(d.path().join("p/rate_ar.svg").exists());
}

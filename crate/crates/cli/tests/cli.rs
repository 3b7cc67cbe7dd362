use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noisytd::config::ExperimentConfig;
use noisytd::report;
use noisytd::verify::{verify_all, VerifyOptions};
use noisytd_core::{evaluate_error, DecisionTree, ExplicitDist, HypothesisClass};

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

fn noisytd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisytd"))
        .args(args)
        .env("NOISYTD_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_cfg(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = examples().join(cfg);
    let out_set = format!("out.dir={}", out.display());
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--set", &out_set];
    for e in extra {
        args.push("--set");
        args.push(e);
    }
    noisytd(&args)
}

#[test]
fn unknown_key_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_cfg("boost.cfg", tmp.path(), &["learner.bogus=3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn missing_config_exits_1() {
    let out = noisytd(&["run", "--config", "/nonexistent.cfg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn corrupted_gini_fails_verify_all_with_exit_2() {
    let out = noisytd(&["verify-all", "--inject-fault", "corrupted-gini"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text
        .lines()
        .find(|l| l.contains("delta_impurity/identity"))
        .unwrap();
    assert!(line.starts_with("FAIL"), "{line}");
}

#[test]
fn verify_all_ledger_is_complete_and_passes() {
    let out = noisytd(&["verify-all", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in [
        "delta_impurity/identity",
        "delta_impurity/drop-bound",
        "moments_tv_dist",
        "TV-leaves",
        "inf-corr",
        "tribes-properties",
        "OSSS",
        "lower-bound-zero-gain",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn seed_change_keeps_outcomes() {
    let outcomes = |seed| {
        let opts = VerifyOptions {
            seed,
            scale: 0.1,
            ..Default::default()
        };
        verify_all(&opts)
            .iter()
            .map(|r| (r.name, r.pass()))
            .collect::<Vec<_>>()
    };
    assert_eq!(outcomes(11), outcomes(12));
}

#[test]
fn lemma_suite_with_fault_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = examples().join("lemma_suite.cfg");
    let out_set = format!("out.dir={}", tmp.path().display());
    let out = noisytd(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        &out_set,
        "--set",
        "suite.scale=0.05",
        "--inject-fault",
        "corrupted-gini",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let oracles = fs::read_to_string(tmp.path().join("oracles.csv")).unwrap();
    assert!(oracles.starts_with("oracle,instance,lhs,rhs,ratio,pass\n"));
}

#[test]
fn error_clean_recomputes_from_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_cfg(
        "boost.cfg",
        tmp.path(),
        &["out.artifacts=true", "out.plans=true"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows =
        report::from_csv(&fs::read_to_string(tmp.path().join("report.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4 * 6);
    for r in &rows {
        let art = tmp.path().join("artifacts");
        let dist = ExplicitDist::from_text(
            &fs::read_to_string(art.join(format!("boost-noise_trial{}_clean.txt", r.trial)))
                .unwrap(),
        )
        .unwrap();
        let tree = DecisionTree::from_text(
            &fs::read_to_string(art.join(format!("boost-noise_trial{}_t{}.tree", r.trial, r.t)))
                .unwrap(),
        )
        .unwrap();
        let class = HypothesisClass::projections(dist.dim());
        let e = evaluate_error(&tree, &class, &dist.into()).unwrap();
        assert!(
            (e - r.error_clean).abs() <= 1e-12,
            "{e} vs {}",
            r.error_clean
        );
    }
    let plan = fs::read_to_string(tmp.path().join("plans/boost-noise_trial0.csv")).unwrap();
    // At most eta n = 2000 edited records, one line each; no-op replacements are dropped.
    let edits = plan.lines().count() - 1;
    assert!(edits <= 2000 && edits > 1500, "{edits}");
}

#[test]
fn plot_command_matches_run_plots() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_cfg("boost.cfg", tmp.path(), &[]).status.success());
    let report = tmp.path().join("report.csv");
    let mut svgs = Vec::new();
    for i in 0..2 {
        let dir = tmp.path().join(format!("plot{i}"));
        let out = noisytd(&[
            "plot",
            "--report",
            report.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        svgs.push(fs::read(dir.join("boost-noise.svg")).unwrap());
    }
    assert_eq!(svgs[0], svgs[1]);
    assert_eq!(
        svgs[0],
        fs::read(tmp.path().join("plots/boost-noise.svg")).unwrap()
    );
}

#[test]
fn plot_rejects_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("empty.csv");
    fs::write(&report, format!("{}\n", report::CSV_HEADER)).unwrap();
    let out = noisytd(&[
        "plot",
        "--report",
        report.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

fn cfg(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let p: Vec<(String, String)> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    ExperimentConfig::from_pairs(&p, &[]).unwrap()
}

#[test]
fn monotone_learn_audits_every_trial() {
    let c = cfg(&[
        ("experiment", "monotone-learn"),
        ("d", "8"),
        ("trials", "3"),
        ("learner.t", "32"),
    ]);
    let out = noisytd::run(&c).unwrap();
    let audits = out
        .summary
        .invariants
        .iter()
        .filter(|r| r.name.ends_with("per-split-drop"))
        .count();
    assert_eq!(audits, 3);
    assert!(out.summary.failures().is_empty());
}

#[test]
fn impurity_compare_emits_one_series_per_impurity() {
    let c = cfg(&[
        ("experiment", "impurity-compare"),
        ("d", "6"),
        ("trials", "2"),
        ("learner.t", "8"),
        ("gamma", "none"),
    ]);
    let out = noisytd::run(&c).unwrap();
    let mut names: Vec<&str> = out.rows.iter().map(|r| r.experiment.as_str()).collect();
    names.dedup();
    assert_eq!(
        names,
        [
            "impurity-compare/entropy",
            "impurity-compare/gini",
            "impurity-compare/kmsqrt"
        ]
    );
}

#[test]
fn shift_noise_in_exact_mode_reports_both_errors() {
    let c = cfg(&[
        ("d", "6"),
        ("noise.model", "shift"),
        ("noise.eta", "0.1"),
        ("learner.t", "16"),
    ]);
    let out = noisytd::run(&c).unwrap();
    let last = out.rows.last().unwrap();
    assert!(last.error_corrupted >= 0.1 - 1e-12);
    assert!(last.error_clean <= 0.1 + 1e-12);
}

#[test]
fn agnostic_labels_run() {
    let c = cfg(&[
        ("d", "6"),
        ("noise.model", "agnostic"),
        ("noise.eta", "0.05"),
        ("noise.strategy", "flip-agreeing-labels"),
        ("learner.mode", "sample"),
        ("learner.n", "5000"),
        ("learner.t", "16"),
    ]);
    let out = noisytd::run(&c).unwrap();
    assert_eq!(out.rows.len(), 5);
    assert!(out
        .rows
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.error_clean)));
}

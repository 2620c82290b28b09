use std::process::Command;

use qdecouple_harness::config::parse_override;
use qdecouple_harness::report::validate_report_json;
use qdecouple_harness::{
    merge_reports, run_experiment, ExperimentConfig, ExperimentKind, HarnessError, Workers,
};

fn cfg(kind: ExperimentKind, sets: &[&str]) -> ExperimentConfig {
    let ov: Vec<_> = sets.iter().map(|s| parse_override(s).unwrap()).collect();
    ExperimentConfig::load(kind, None, &ov).unwrap()
}

#[test]
fn worker_count_does_not_change_records() {
    let mut a = cfg(ExperimentKind::Uncertainty, &["trials=40"]);
    a.workers = Workers::Count(1);
    let mut b = a.clone();
    b.workers = Workers::Count(4);
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    assert_eq!(ra.records, rb.records);
    assert_eq!(ra.trials_csv().unwrap(), rb.trials_csv().unwrap());
    assert_eq!(ra.aggregates, rb.aggregates);
}

#[test]
fn merge_laws() {
    let whole = cfg(ExperimentKind::Pgm, &["trials=60"]);
    let a = cfg(ExperimentKind::Pgm, &["trials=25"]);
    let b = cfg(ExperimentKind::Pgm, &["trials=35", "first_trial=25"]);
    let (rw, ra, rb) = (
        run_experiment(&whole).unwrap(),
        run_experiment(&a).unwrap(),
        run_experiment(&b).unwrap(),
    );

    let ab = merge_reports(&[ra.clone(), rb.clone()]).unwrap();
    let ba = merge_reports(&[rb.clone(), ra.clone()]).unwrap();
    assert_eq!(ab, ba);
    assert_eq!(ab.records, rw.records);
    assert_eq!(ab.aggregates, rw.aggregates);
    assert_eq!(ab.checks, rw.checks);

    let solo = merge_reports(std::slice::from_ref(&ra)).unwrap();
    assert_eq!(solo, ra);

    assert!(matches!(
        merge_reports(&[ra.clone(), ra.clone()]),
        Err(HarnessError::Mismatch(_))
    ));
    let other = run_experiment(&cfg(ExperimentKind::Pgm, &["trials=5", "pgm.dims=[3]"])).unwrap();
    assert!(matches!(
        merge_reports(&[ra, other]),
        Err(HarnessError::Mismatch(_))
    ));
}

#[test]
fn pooled_wilson_interval_is_narrower() {
    // two seed partitions at the same event rate
    let a = cfg(ExperimentKind::Pgm, &["trials=50", "master_seed=1"]);
    let b = cfg(ExperimentKind::Pgm, &["trials=50", "master_seed=2"]);
    let (ra, rb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
    let pooled = merge_reports(&[ra.clone(), rb.clone()]).unwrap();
    let width = |r: &qdecouple_harness::ExperimentReport| {
        let w = r.aggregate("symmetric").unwrap().wilson.unwrap();
        w[1] - w[0]
    };
    assert_eq!(pooled.aggregate("symmetric").unwrap().count, 100);
    assert_eq!(pooled.seeds, vec![1, 2]);
    assert!(width(&pooled) < width(&ra) && width(&pooled) < width(&rb));
}

#[test]
fn failing_trials_are_recorded_not_fatal() {
    // a code larger than the input space fails in every trial
    let c = cfg(ExperimentKind::CodeRun, &["trials=3", "code.N=17"]);
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.failed_trials, 3);
    assert!(r.records.iter().all(|t| t.error.is_some() && t.metrics.is_empty()));
    assert!(r.trials_csv().unwrap().contains("0,failed,1"));
    validate_report_json(&r.to_json().unwrap()).unwrap();
}

#[test]
fn capacity_errors_name_the_cap() {
    let c = cfg(ExperimentKind::IidSweep, &["iid.ns=[10]"]);
    match run_experiment(&c) {
        Err(HarnessError::Capacity { what, cap, .. }) => {
            assert!(what.contains("^n"), "{what}");
            assert_eq!(cap, (1u64 << 18) as f64);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn reports_follow_the_schema() {
    let r = run_experiment(&cfg(ExperimentKind::Typicality, &[])).unwrap();
    let mut json = r.to_json().unwrap();
    validate_report_json(&json).unwrap();
    json["unexpected"] = serde_json::json!(1);
    assert!(matches!(
        validate_report_json(&json),
        Err(HarnessError::Schema(_))
    ));
    let mut json = r.to_json().unwrap();
    json["config"]["channel"]["family"] = serde_json::json!("teleporter");
    assert!(validate_report_json(&json).is_err());
}

#[test]
fn cli_writes_outputs_and_sets_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_qdecouple");

    let out = dir.path().join("pgm");
    let status = Command::new(exe)
        .args(["pgm", "--trials", "20", "--seed", "9", "--workers", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert!(csv.starts_with("trial,metric,value\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["master_seed"], 9);
    assert_eq!(report["records"].as_array().unwrap().len(), 20);

    // a failing check gives exit code 1
    let status = Command::new(exe)
        .args(["typicality", "--set", "typicality.ns=[20,8]", "--out"])
        .arg(dir.path().join("typ"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // config errors give exit code 2
    let cfg_path = dir.path().join("bad.toml");
    std::fs::write(&cfg_path, "trials = 5\n[code]\nbogus = 1\n").unwrap();
    let output = Command::new(exe)
        .args(["code-run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("code"));

    let status = Command::new(exe).args(["pgm", "--trials", "0"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(exe).args(["no-such-command"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "experiment = \"code-run\"\nmaster_seed = 5\ntrials = 3\n\n[channel]\nfamily = \"dephasing\"\nparam = 0.2\nd = 2\nn = 2\n\n[code]\nN = 2\n",
    )
    .unwrap();
    let c = ExperimentConfig::load(ExperimentKind::CodeRun, Some(&path), &[]).unwrap();
    assert_eq!((c.master_seed, c.trials, c.channel.n), (5, 3, 2));
    assert_eq!(c.code.n, Some(2));
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.failed_trials, 0);
    assert!(r.passed);

    assert!(matches!(
        ExperimentConfig::load(ExperimentKind::Pgm, Some(&path), &[]),
        Err(HarnessError::Config { .. })
    ));
}

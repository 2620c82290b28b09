//! Trial records, order-independent aggregation, merging and output files.

use std::collections::BTreeMap;
use std::path::Path;

use qdecouple_core::stats::{wilson_interval, Z_99};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Workers};
use crate::error::HarnessError;

pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    /// Set when the trial failed; its metrics are then empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub metric: String,
    pub count: u64,
    pub sum: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// 99% Wilson interval, present for indicator metrics (all values 0 or 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilson: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
}

impl Check {
    /// `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
        }
    }

    /// `value ≥ limit`.
    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= limit,
            value: Some(value),
            limit: Some(limit),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            value: None,
            limit: None,
        }
    }
}

/// Theoretical quantities and checks derived from the records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub bounds: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub library_version: String,
    /// Master seeds of the runs pooled into this report.
    pub seeds: Vec<u64>,
    pub records: Vec<TrialRecord>,
    pub failed_trials: u64,
    pub aggregates: Vec<Aggregate>,
    pub bounds: BTreeMap<String, f64>,
    pub labels: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

/// Aggregates over records sorted by `(trial, seed)`, so the result does not depend
/// on execution or merge order.
pub fn aggregate(records: &[TrialRecord]) -> Vec<Aggregate> {
    let mut by_name: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        for m in &r.metrics {
            by_name.entry(&m.name).or_default().push(m.value);
        }
    }
    by_name
        .into_iter()
        .map(|(name, vals)| {
            let count = vals.len() as u64;
            let sum: f64 = vals.iter().sum();
            let indicator = vals.iter().all(|&v| v == 0.0 || v == 1.0);
            let wilson = indicator.then(|| {
                let (lo, hi) = wilson_interval(sum as u64, count, Z_99);
                [lo, hi]
            });
            Aggregate {
                metric: name.to_string(),
                count,
                sum,
                mean: sum / count as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                wilson,
            }
        })
        .collect()
}

pub fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by_key(|r| (r.trial, r.seed));
}

/// Values of one metric across records, in record order.
pub fn values(records: &[TrialRecord], name: &str) -> Vec<f64> {
    records.iter().filter_map(|r| r.get(name)).collect()
}

impl ExperimentReport {
    pub fn assemble(
        config: ExperimentConfig,
        seeds: Vec<u64>,
        mut records: Vec<TrialRecord>,
        evaluate: impl Fn(&ExperimentConfig, &[TrialRecord]) -> Evaluation,
        wall_clock_seconds: f64,
    ) -> Self {
        sort_records(&mut records);
        let aggregates = aggregate(&records);
        let mut eval = evaluate(&config, &records);
        // non-finite values have no JSON representation
        eval.bounds.retain(|_, v| v.is_finite());
        let failed_trials = records.iter().filter(|r| r.error.is_some()).count() as u64;
        let passed = eval.checks.iter().all(|c| c.passed);
        Self {
            config,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            records,
            failed_trials,
            aggregates,
            bounds: eval.bounds,
            labels: eval.labels,
            checks: eval.checks,
            passed,
            wall_clock_seconds,
        }
    }

    pub fn aggregate(&self, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.metric == metric)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Long-format rows `trial,metric,value`; a failed trial contributes `failed = 1`.
    pub fn trials_csv(&self) -> Result<String, HarnessError> {
        let err = |e: csv::Error| HarnessError::Invalid(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "metric", "value"]).map_err(err)?;
        for r in &self.records {
            if r.error.is_some() {
                w.write_record([r.trial.to_string(), "failed".into(), "1".into()])
                    .map_err(err)?;
            }
            for m in &r.metrics {
                // `{:?}` prints the shortest round-tripping decimal
                w.write_record([r.trial.to_string(), m.name.clone(), format!("{:?}", m.value)])
                    .map_err(err)?;
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> Result<serde_json::Value, HarnessError> {
        serde_json::to_value(self).map_err(|e| HarnessError::Invalid(e.to_string()))
    }

    /// Writes `report.json` (after schema validation) and `trials.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let json = self.to_json()?;
        validate_report_json(&json)?;
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |e| HarnessError::Io { path, source: e }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let report_path = dir.join("report.json");
        let text = serde_json::to_string_pretty(&json)
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
        std::fs::write(&report_path, text + "\n").map_err(io(&report_path))?;
        let csv_path = dir.join("trials.csv");
        std::fs::write(&csv_path, self.trials_csv()?).map_err(io(&csv_path))?;
        Ok(())
    }
}

pub fn validate_report_json(json: &serde_json::Value) -> Result<(), HarnessError> {
    let schema: serde_json::Value =
        serde_json::from_str(REPORT_SCHEMA).map_err(|e| HarnessError::Schema(e.to_string()))?;
    let validator =
        jsonschema::validator_for(&schema).map_err(|e| HarnessError::Schema(e.to_string()))?;
    let errors: Vec<String> = validator
        .iter_errors(json)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Schema(errors.join("; ")))
    }
}

/// Config with the fields that may legitimately differ between mergeable runs blanked.
fn merge_key(c: &ExperimentConfig) -> ExperimentConfig {
    let mut c = c.clone();
    c.master_seed = 0;
    c.trials = 0;
    c.first_trial = 0;
    c.output_path = Default::default();
    c.workers = Workers::Auto;
    c
}

/// Pools runs of the same experiment over disjoint trial ranges or seed partitions.
/// Records are re-sorted and every aggregate and check is recomputed from the pool.
pub fn merge_reports(
    reports: &[ExperimentReport],
    evaluate: impl Fn(&ExperimentConfig, &[TrialRecord]) -> Evaluation,
) -> Result<ExperimentReport, HarnessError> {
    let first = reports
        .first()
        .ok_or_else(|| HarnessError::Mismatch("no reports given".into()))?;
    let key = merge_key(&first.config);
    for r in &reports[1..] {
        if merge_key(&r.config) != key {
            return Err(HarnessError::Mismatch(
                "configs differ beyond trial ranges and seeds".into(),
            ));
        }
        if r.library_version != first.library_version {
            return Err(HarnessError::Mismatch("library versions differ".into()));
        }
    }
    let mut records: Vec<TrialRecord> = reports.iter().flat_map(|r| r.records.clone()).collect();
    sort_records(&mut records);
    if records
        .windows(2)
        .any(|w| (w[0].trial, w[0].seed) == (w[1].trial, w[1].seed))
    {
        return Err(HarnessError::Mismatch("overlapping trials".into()));
    }
    let mut seeds: Vec<u64> = reports.iter().flat_map(|r| r.seeds.clone()).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let mut config = first.config.clone();
    config.master_seed = seeds[0];
    config.first_trial = reports.iter().map(|r| r.config.first_trial).min().unwrap_or(0);
    config.trials = records.len() as u64;
    config.output_path = reports
        .iter()
        .map(|r| r.config.output_path.clone())
        .min()
        .unwrap_or_default();
    config.workers = Workers::Auto;
    let wall = reports
        .iter()
        .map(|r| r.wall_clock_seconds)
        .fold(0.0, f64::max);
    Ok(ExperimentReport::assemble(
        config, seeds, records, evaluate, wall,
    ))
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdecouple_harness::config::{parse_override, seed_value};
use qdecouple_harness::{run_experiment, ExperimentConfig, ExperimentKind, HarnessError};

#[derive(Parser)]
#[command(name = "qdecouple", version, about = "Run seeded decoupling and decoding audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian concentration tails against their bounds.
    Concentration(RunArgs),
    /// Random subspace codes through a channel.
    CodeRun(RunArgs),
    /// Typical-subspace reduction of i.i.d. channel uses, swept over n.
    IidSweep(RunArgs),
    /// Information-uncertainty, duality, Pinsker and Fano audits on random instances.
    Uncertainty(RunArgs),
    /// Pretty good measurement against the Helstrom error.
    Pgm(RunArgs),
    /// Typical-subspace bounds and truncation weights.
    Typicality(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; keys not given keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory for report.json and trials.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Override a config key, e.g. `--set channel.param=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Concentration(a) => (ExperimentKind::Concentration, a),
            Command::CodeRun(a) => (ExperimentKind::CodeRun, a),
            Command::IidSweep(a) => (ExperimentKind::IidSweep, a),
            Command::Uncertainty(a) => (ExperimentKind::Uncertainty, a),
            Command::Pgm(a) => (ExperimentKind::Pgm, a),
            Command::Typicality(a) => (ExperimentKind::Typicality, a),
        }
    }
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<bool, HarnessError> {
    let mut overrides = args
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = args.seed {
        overrides.push(("master_seed".into(), seed_value(seed)));
    }
    if let Some(t) = args.trials {
        overrides.push(("trials".into(), toml::Value::Integer(t as i64)));
    }
    if let Some(out) = &args.out {
        overrides.push((
            "output_path".into(),
            toml::Value::String(out.display().to_string()),
        ));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers".into(), toml::Value::Integer(w as i64)));
    }
    let cfg = ExperimentConfig::load(kind, args.config.as_deref(), &overrides)?;
    let report = run_experiment(&cfg)?;
    report.write(&cfg.output_path)?;
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        match (c.value, c.limit) {
            (Some(v), Some(l)) => println!("{status} {} (value {v:.6e}, limit {l:.6e})", c.name),
            _ => println!("{status} {}", c.name),
        }
    }
    for (k, v) in &report.labels {
        println!("note {k}: {v}");
    }
    println!(
        "{} trials, {} failed, {:.2}s -> {}",
        report.records.len(),
        report.failed_trials,
        report.wall_clock_seconds,
        cfg.output_path.display()
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

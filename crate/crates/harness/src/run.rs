//! Dispatch of experiments onto the library audits.

use std::time::Instant;

use qdecouple_core::channels::{standard_channel, Ensemble, StinespringIsometry};
use qdecouple_core::codes::{build_random_code, measured_diagnostics};
use qdecouple_core::decode::{
    helstrom_error, information_audit, joint_state, lambda, oneshot_preconditions,
    output_decoding_errors, pgm_error, Preconditions,
};
use qdecouple_core::gaussian::{tail_bound, tail_event, TailBoundReport, TailParams};
use qdecouple_core::qit::{hermitian_eigen, DensityOperator, Operator, PositiveOperator, PureState};
use qdecouple_core::random::{random_density, random_isometry, random_pure, random_unitary};
use qdecouple_core::rng::{derive_seed, stream};
use qdecouple_core::stats::median;
use qdecouple_core::typicality::{iid_reduction, spectrum_report, IidSummary};
use rand::Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, Workers};
use crate::error::HarnessError;
use crate::report::{self, values, Check, Evaluation, ExperimentReport, Metric, TrialRecord};

/// Residual limit for identities that hold exactly.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Slack limit for inequalities.
pub const SLACK_TOL: f64 = 1e-8;
/// Slack limit for PGM against Helstrom.
pub const HELSTROM_TOL: f64 = 1e-10;
/// Equality limit for PGM on symmetric pure pairs.
pub const SYMMETRIC_TOL: f64 = 1e-9;
/// `λ` above this makes the one-shot bounds vacuous.
pub const LAMBDA_VACUOUS: f64 = 0.5;

/// Immutable inputs shared by all trials.
enum Setup {
    Concentration,
    Code {
        v: StinespringIsometry,
        rho: DensityOperator,
        n_code: usize,
        pre: Preconditions,
    },
    Iid(Vec<IidCase>),
    Uncertainty,
    Pgm,
    Typicality,
}

struct IidCase {
    n: usize,
    v: StinespringIsometry,
    rho: DensityOperator,
    n_code: usize,
    summary: IidSummary,
}

fn need_code_size(cfg: &ExperimentConfig, uses: usize) -> Result<usize, HarnessError> {
    cfg.code_size(uses).ok_or_else(|| HarnessError::Config {
        path: "code.N".into(),
        message: "set either code.N or code.rate".into(),
    })
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        Ok(match cfg.experiment {
            ExperimentKind::Concentration => {
                for &d in &cfg.concentration.dims {
                    for &eps in &cfg.concentration.epsilons {
                        for &b in &cfg.concentration.bounds {
                            if eps <= b.max_epsilon() {
                                tail_bound(b, &cell_params(cfg, d, eps))?;
                            }
                        }
                    }
                }
                Setup::Concentration
            }
            ExperimentKind::CodeRun => {
                let single = standard_channel(cfg.channel.family()?, cfg.channel.d)?;
                let v = single.tensor_power(cfg.channel.n)?;
                let rho = DensityOperator::maximally_mixed(v.dim_a());
                let n_code = need_code_size(cfg, cfg.channel.n)?;
                let p_b = PositiveOperator::identity(v.dim_b());
                let p_e = PositiveOperator::identity(v.dim_e());
                let pre = oneshot_preconditions(&v, &rho, &p_b, &p_e)?;
                Setup::Code {
                    v,
                    rho,
                    n_code,
                    pre,
                }
            }
            ExperimentKind::IidSweep => {
                let single = standard_channel(cfg.channel.family()?, cfg.channel.d)?;
                let rho = DensityOperator::maximally_mixed(cfg.channel.d);
                let mut ns = cfg.iid.ns.clone();
                ns.sort_unstable();
                ns.dedup();
                let cases = ns
                    .into_iter()
                    .map(|n| {
                        let red = iid_reduction(&single, &rho, n, cfg.code.delta)?;
                        let rank = hermitian_eigen(red.rho_tilde.matrix()).rank();
                        let n_code = match cfg.code_size(n) {
                            Some(k) => k,
                            None => {
                                let rule = if red.recipe_log2_n < 0.0 {
                                    0
                                } else {
                                    red.recipe_log2_n.exp2().floor() as usize
                                };
                                rule.max(2)
                            }
                        }
                        .min(rank);
                        Ok(IidCase {
                            n,
                            summary: red.summary(),
                            v: red.channel,
                            rho: red.rho_tilde,
                            n_code,
                        })
                    })
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                Setup::Iid(cases)
            }
            ExperimentKind::Uncertainty => Setup::Uncertainty,
            ExperimentKind::Pgm => Setup::Pgm,
            ExperimentKind::Typicality => {
                for &n in &cfg.typicality.ns {
                    spectrum_report(&cfg.typicality.spectrum, n, cfg.typicality.delta)?;
                }
                Setup::Typicality
            }
        })
    }
}

fn cell_params(cfg: &ExperimentConfig, d: usize, eps: f64) -> TailParams {
    let rank = ((cfg.concentration.rank_fraction * d as f64).round() as usize).max(1);
    TailParams::with_projector(d, eps, rank, cfg.concentration.copies)
}

fn cell_name(d: usize, eps: f64, bound: &str) -> String {
    format!("D{d}/eps{eps}/{bound}")
}

#[derive(Default)]
struct Metrics(Vec<Metric>);

impl Metrics {
    fn push(&mut self, name: impl Into<String>, value: f64) {
        // non-finite values do not survive JSON
        if value.is_finite() {
            self.0.push(Metric {
                name: name.into(),
                value,
            });
        }
    }

    fn flag(&mut self, name: impl Into<String>, b: bool) {
        self.push(name, if b { 1.0 } else { 0.0 });
    }
}

fn code_metrics(
    m: &mut Metrics,
    prefix: &str,
    v: &StinespringIsometry,
    rho: &DensityOperator,
    n_code: usize,
    pre_epsilon: f64,
    seed: u64,
    divisor: qdecouple_core::decode::ExponentDivisor,
) -> Result<(), HarnessError> {
    let code = build_random_code(rho, n_code, seed)?;
    let diag = measured_diagnostics(&code);
    let psi = joint_state(&code, v)?;
    let audit = information_audit(&psi, &code, v)?;
    let errs = output_decoding_errors(&code, v)?;
    let lam = lambda(diag.epsilon.max(pre_epsilon), diag.eta, n_code, divisor);
    let p = |s: &str| format!("{prefix}{s}");
    m.push(p("N"), n_code as f64);
    m.push(p("epsilon"), diag.epsilon);
    m.push(p("eta"), diag.eta);
    m.push(p("perturbation_avg"), diag.perturbation_avg);
    m.push(p("perturbation_bound"), diag.bound_value);
    m.flag(p("perturbation_applicable"), diag.applicable);
    m.flag(
        p("perturbation_violation"),
        diag.applicable && !diag.bound_holds,
    );
    m.push(p("H_R"), audit.h_r);
    m.push(p("I_RB"), audit.i_rb);
    m.push(p("I_RE"), audit.i_re);
    m.push(p("chi_basis"), audit.chi_basis);
    m.push(p("chi_conjugate"), audit.chi_conjugate);
    m.push(p("duality_residual"), audit.duality_residual);
    m.push(p("pinsker_slack"), audit.pinsker_slack);
    m.push(p("uncertainty_slack"), audit.uncertainty_slack);
    m.push(p("fano_bound"), audit.fano_bound);
    m.push(p("fano_slack"), audit.fano_slack());
    m.push(p("decoupling_distance"), audit.decoupling_distance);
    m.push(p("pgm_error_basis"), errs.basis);
    m.push(p("pgm_error_conjugate"), errs.conjugate);
    m.push(p("lambda"), lam);
    Ok(())
}

fn trial(
    setup: &Setup,
    cfg: &ExperimentConfig,
    index: u64,
    seed: u64,
) -> Result<Vec<Metric>, HarnessError> {
    let mut m = Metrics::default();
    match setup {
        Setup::Concentration => {
            let c = &cfg.concentration;
            for &d in &c.dims {
                for &eps in &c.epsilons {
                    let params = cell_params(cfg, d, eps);
                    for &b in &c.bounds {
                        if eps > b.max_epsilon() {
                            continue;
                        }
                        let name = cell_name(d, eps, b.name());
                        let mut rng = stream(seed, &name, 0);
                        m.flag(name, tail_event(b, &params, &mut rng));
                    }
                }
            }
        }
        Setup::Code {
            v,
            rho,
            n_code,
            pre,
        } => code_metrics(
            &mut m,
            "",
            v,
            rho,
            *n_code,
            pre.epsilon,
            seed,
            cfg.code.exponent_divisor,
        )?,
        Setup::Iid(cases) => {
            for case in cases {
                let s = derive_seed(seed, "iid/n", case.n as u64);
                code_metrics(
                    &mut m,
                    &format!("n{}/", case.n),
                    &case.v,
                    &case.rho,
                    case.n_code,
                    case.summary.measured.epsilon,
                    s,
                    cfg.code.exponent_divisor,
                )?;
            }
        }
        Setup::Uncertainty => {
            let u = &cfg.uncertainty;
            let mut rng = stream(seed, "uncertainty", 0);
            let da = rng.random_range(1..=u.max_dim_a);
            let (db, de) = loop {
                let db = rng.random_range(1..=u.max_dim_b);
                let de = rng.random_range(1..=u.max_dim_e);
                if db * de >= da {
                    break (db, de);
                }
            };
            let n_code = rng.random_range(1..=u.max_code.min(da));
            let rank = rng.random_range(n_code..=da);
            let v = StinespringIsometry::new(random_isometry(db * de, da, &mut rng), db, de)?;
            let rho = random_density(da, rank, &mut rng);
            m.push("dim_a", da as f64);
            m.push("dim_b", db as f64);
            m.push("dim_e", de as f64);
            m.push("rank", rank as f64);
            code_metrics(
                &mut m,
                "",
                &v,
                &rho,
                n_code,
                0.0,
                derive_seed(seed, "uncertainty/code", 0),
                cfg.code.exponent_divisor,
            )?;
        }
        Setup::Pgm => {
            let p = &cfg.pgm;
            let mut rng = stream(seed, "pgm", 0);
            let dim = p.dims[rng.random_range(0..p.dims.len())];
            let symmetric = p.symmetric_every > 0 && index % p.symmetric_every == p.symmetric_every - 1;
            let (s0, s1) = if symmetric {
                let psi = random_pure(dim, &mut rng);
                let u = random_unitary(dim, &mut rng);
                let phi = PureState::new(u * psi.vector())?;
                (DensityOperator::pure(&psi), DensityOperator::pure(&phi))
            } else {
                let r0 = rng.random_range(1..=dim);
                let r1 = rng.random_range(1..=dim);
                (
                    random_density(dim, r0, &mut rng),
                    random_density(dim, r1, &mut rng),
                )
            };
            let pgm = pgm_error(&Ensemble::uniform_states(&[s0.clone(), s1.clone()])?)?;
            let hel = helstrom_error(&s0, &s1)?;
            m.push("dim", dim as f64);
            m.flag("symmetric", symmetric);
            m.push("pgm_error", pgm);
            m.push("helstrom_error", hel);
            m.push("gap", pgm - hel);
            if symmetric {
                m.push("symmetric_gap", pgm - hel);
            }
        }
        Setup::Typicality => {
            let t = &cfg.typicality;
            for &n in &t.ns {
                let r = spectrum_report(&t.spectrum, n, t.delta)?;
                let p = |s: &str| format!("n{n}/{s}");
                m.push(p("subspace_dim"), r.subspace_dim as f64);
                m.push(p("log2_dim_bound"), r.log2_dim_bound);
                m.flag(p("dim_ok"), r.dim_ok);
                if let Some(x) = r.max_log_prob {
                    m.push(p("max_log2_prob"), x);
                }
                m.push(p("log2_operator_bound"), r.log2_operator_bound);
                m.flag(p("operator_ok"), r.operator_ok);
                m.push(p("truncation_weight"), r.truncation_weight);
            }
        }
    }
    Ok(m.0)
}

fn min_of(records: &[TrialRecord], name: &str) -> Option<f64> {
    values(records, name).into_iter().reduce(f64::min)
}

fn max_abs_of(records: &[TrialRecord], name: &str) -> Option<f64> {
    values(records, name).into_iter().map(f64::abs).reduce(f64::max)
}

/// `value ≤ limit`; fails when no trial produced the metric.
fn at_most(name: String, value: Option<f64>, limit: f64) -> Check {
    match value {
        Some(v) => Check::at_most(name, v, limit),
        None => Check {
            name,
            passed: false,
            value: None,
            limit: Some(limit),
        },
    }
}

/// `value ≥ limit`; fails when no trial produced the metric.
fn at_least(name: String, value: Option<f64>, limit: f64) -> Check {
    match value {
        Some(v) => Check::at_least(name, v, limit),
        None => Check {
            name,
            passed: false,
            value: None,
            limit: Some(limit),
        },
    }
}

fn code_checks(ev: &mut Evaluation, records: &[TrialRecord], prefix: &str) {
    let p = |s: &str| format!("{prefix}{s}");
    ev.checks.push(at_most(
        p("duality_residual"),
        max_abs_of(records, &p("duality_residual")),
        IDENTITY_TOL,
    ));
    for slack in ["pinsker_slack", "uncertainty_slack", "fano_slack"] {
        ev.checks
            .push(at_least(p(slack), min_of(records, &p(slack)), -SLACK_TOL));
    }
    let flags = values(records, &p("perturbation_violation"));
    let violations = (!flags.is_empty()).then(|| flags.iter().sum());
    ev.checks
        .push(at_most(p("perturbation_bound"), violations, 0.0));
    let lams = values(records, &p("lambda"));
    if !lams.is_empty() {
        let lo = lams.iter().copied().fold(f64::INFINITY, f64::min);
        ev.bounds.insert(p("lambda_min"), lo);
        let label = if lo > LAMBDA_VACUOUS {
            format!("vacuous: lambda >= {lo:.4} > 1/2 in every trial")
        } else {
            format!("non-vacuous in some trials: min lambda = {lo:.4}")
        };
        ev.labels.insert(p("lambda"), label);
    }
}

fn evaluate(setup: &Setup, cfg: &ExperimentConfig, records: &[TrialRecord]) -> Evaluation {
    let mut ev = Evaluation::default();
    match setup {
        Setup::Concentration => {
            let c = &cfg.concentration;
            for &d in &c.dims {
                for &eps in &c.epsilons {
                    let params = cell_params(cfg, d, eps);
                    for &b in &c.bounds {
                        let name = cell_name(d, eps, b.name());
                        if eps > b.max_epsilon() {
                            ev.labels.insert(name, "outside the bound's epsilon range".into());
                            continue;
                        }
                        let Ok(theory) = tail_bound(b, &params) else {
                            continue;
                        };
                        let hits = values(records, &name);
                        let events = hits.iter().filter(|&&x| x == 1.0).count() as u64;
                        let rep = TailBoundReport::from_counts(
                            b,
                            eps,
                            theory,
                            events,
                            hits.len() as u64,
                        );
                        ev.bounds.insert(name.clone(), theory);
                        if rep.vacuous() {
                            ev.labels.insert(name.clone(), "vacuous".into());
                        }
                        ev.checks.push(Check {
                            name,
                            passed: rep.passed(),
                            value: Some(rep.wilson_upper),
                            limit: Some(theory),
                        });
                    }
                }
            }
        }
        Setup::Code { n_code, pre, .. } => {
            ev.bounds.insert("N".into(), *n_code as f64);
            ev.bounds.insert("D_param".into(), pre.d_param);
            ev.bounds.insert("Delta".into(), pre.delta);
            ev.bounds.insert("rank_PE".into(), pre.rank_pe as f64);
            code_checks(&mut ev, records, "");
        }
        Setup::Iid(cases) => {
            let mut medians = Vec::new();
            for case in cases {
                let prefix = format!("n{}/", case.n);
                let s = &case.summary;
                let b = |k: &str| format!("{prefix}{k}");
                ev.bounds.insert(b("N"), case.n_code as f64);
                ev.bounds.insert(b("recipe_log2_N"), s.recipe_log2_n);
                ev.bounds.insert(b("typical_input_dim"), s.typical_input_dim as f64);
                ev.bounds.insert(b("epsilon_measured"), s.measured.epsilon);
                ev.bounds.insert(b("D_param_measured"), s.measured.d_param);
                ev.bounds.insert(b("Delta_measured"), s.measured.delta);
                ev.bounds.insert(b("rank_PE"), s.measured.rank_pe as f64);
                ev.bounds.insert(b("D_param_nominal"), s.nominal.d_param);
                ev.bounds.insert(b("Delta_nominal"), s.nominal.delta);
                ev.bounds.insert(b("rank_PE_nominal"), s.nominal.rank_pe_bound);
                ev.bounds.insert(b("coherent_information"), s.coherent_information);
                code_checks(&mut ev, records, &prefix);
                if let Some(med) = median(&values(records, &b("decoupling_distance"))) {
                    ev.bounds.insert(b("median_decoupling_distance"), med);
                    medians.push(med);
                }
            }
            ev.checks.push(Check::flag(
                "median_decoupling_nonincreasing",
                medians.len() == cases.len() && medians.windows(2).all(|w| w[1] <= w[0]),
            ));
            if let Some(last) = cases.last() {
                for which in ["pgm_error_basis", "pgm_error_conjugate"] {
                    let name = format!("n{}/{which}", last.n);
                    let worst = values(records, &name).into_iter().reduce(f64::max);
                    ev.checks.push(at_most(name, worst, cfg.iid.pgm_threshold));
                }
            }
        }
        Setup::Uncertainty => code_checks(&mut ev, records, ""),
        Setup::Pgm => {
            ev.checks.push(at_least(
                "pgm_dominates_helstrom".into(),
                min_of(records, "gap"),
                -HELSTROM_TOL,
            ));
            if cfg.pgm.symmetric_every > 0 {
                ev.checks.push(at_most(
                    "symmetric_equality".into(),
                    max_abs_of(records, "symmetric_gap"),
                    SYMMETRIC_TOL,
                ));
            }
        }
        Setup::Typicality => {
            let t = &cfg.typicality;
            let mut weights = Vec::new();
            for &n in &t.ns {
                let p = |s: &str| format!("n{n}/{s}");
                for flag in ["dim_ok", "operator_ok"] {
                    ev.checks.push(at_least(p(flag), min_of(records, &p(flag)), 1.0));
                }
                if let Some(w) = values(records, &p("truncation_weight")).first() {
                    weights.push(*w);
                }
            }
            ev.checks.push(Check::flag(
                "truncation_weight_strictly_decreasing",
                weights.len() == t.ns.len() && weights.windows(2).all(|w| w[1] < w[0]),
            ));
        }
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        ev.labels
            .insert("failed_trials".into(), format!("{failed} trial(s) failed"));
    }
    ev
}

/// Runs the configured experiment. Trial `i` draws from `derive_seed(master, kind, i)`,
/// so results do not depend on worker count or scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let setup = Setup::new(cfg)?;
    let label = format!("trial/{}", cfg.experiment.name());
    let range = cfg.first_trial..cfg.first_trial + cfg.trials;
    let work = || -> Vec<TrialRecord> {
        range
            .clone()
            .into_par_iter()
            .map(|i| {
                let seed = derive_seed(cfg.master_seed, &label, i);
                match trial(&setup, cfg, i, seed) {
                    Ok(metrics) => TrialRecord {
                        trial: i,
                        seed,
                        metrics,
                        error: None,
                    },
                    Err(e) => TrialRecord {
                        trial: i,
                        seed,
                        metrics: Vec::new(),
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    };
    let records = match cfg.workers {
        Workers::Auto => work(),
        Workers::Count(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?
            .install(work),
    };
    Ok(ExperimentReport::assemble(
        cfg.clone(),
        vec![cfg.master_seed],
        records,
        |c, r| evaluate(&setup, c, r),
        start.elapsed().as_secs_f64(),
    ))
}

/// Pools reports of the same experiment; see [`report::merge_reports`].
pub fn merge_reports(reports: &[ExperimentReport]) -> Result<ExperimentReport, HarnessError> {
    let first = reports
        .first()
        .ok_or_else(|| HarnessError::Mismatch("no reports given".into()))?;
    let setup = Setup::new(&first.config)?;
    report::merge_reports(reports, |c, r| evaluate(&setup, c, r))
}

use qdecouple_core::channels::{
    environment_output, standard_channel, ChannelFamily, StinespringIsometry,
};
use qdecouple_core::codes::{build_random_code, code_diagnostics};
use qdecouple_core::decode::{gamma_pgm_error, packing_parameters, PackingParams};
use qdecouple_core::qit::{hermitian_eigen, outer, DensityOperator, Operator, PositiveOperator};
use qdecouple_core::rng::derive_seed;
use qdecouple_core::stats::{wilson_upper_99, Z_99};

const DRAWS: u64 = 200;

/// `P^E` onto the top `rank` eigenvectors of `N^c(ρ̃)`.
fn top_projector(m: &DensityOperator, rank: usize) -> PositiveOperator {
    let eig = hermitian_eigen(m.matrix());
    let d = m.dim();
    let mut p = qdecouple_core::qit::CMatrix::zeros(d, d);
    for i in (d - rank)..d {
        let v = eig.vectors.column(i).into_owned();
        p += outer(&v, &v);
    }
    PositiveOperator::new(p).unwrap()
}

/// Mean PGM error of the γ-ensemble over `DRAWS` codes against `6√ε + 4η` plus three
/// normal-approximation 99% half-widths.
fn audit(label: &str, v: &StinespringIsometry, n: usize, p_e: &PositiveOperator) -> PackingParams {
    let rho = DensityOperator::maximally_mixed(v.dim_a());
    let p_b = PositiveOperator::identity(v.dim_b());
    let params = packing_parameters(v, &rho, &p_b, p_e, n).unwrap();
    assert!(params.bound.simple < 1.0, "{label}: vacuous regime {params:?}");
    let errors: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let code = build_random_code(&rho, n, derive_seed(11, label, i)).unwrap();
            gamma_pgm_error(&code, v).unwrap()
        })
        .collect();
    let k = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / k;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let margin = Z_99 * var.sqrt() / k.sqrt();
    assert!(
        mean <= params.bound.simple + 3.0 * margin,
        "{label}: mean {mean} vs bound {} + 3·{margin}",
        params.bound.simple
    );
    params
}

#[test]
fn packing_bound_dominates_identity() {
    let v = standard_channel(ChannelFamily::Identity, 32).unwrap();
    let p_e = PositiveOperator::identity(1);
    let p = audit("identity", &v, 4, &p_e);
    assert_eq!(p.epsilon, 0.0);
    assert!((p.eta - 4.0 / 32.0).abs() < 1e-12);
}

#[test]
fn packing_bound_dominates_depolarizing() {
    let v = standard_channel(ChannelFamily::Depolarizing { p: 0.005 }, 16).unwrap();
    let rho = DensityOperator::maximally_mixed(16);
    let env = environment_output(&v, &rho).unwrap();
    let p_e = top_projector(&env, 1);
    let p = audit("depolarizing", &v, 2, &p_e);
    assert!(p.epsilon > 0.0 && p.epsilon < 0.01);
}

#[test]
fn length_violations_follow_the_concentration_bound() {
    let (d, n, eps, seeds) = (256usize, 8usize, 0.25f64, 400u64);
    let rho = DensityOperator::maximally_mixed(d);
    let bound = 2.0 * n as f64 * (-(d as f64) * eps * eps / 4.0).exp();
    assert!(bound < 1.0);
    let violations = (0..seeds)
        .filter(|&i| {
            let code = build_random_code(&rho, n, derive_seed(5, "length", i)).unwrap();
            !code_diagnostics(&code, eps, 1.0).length_ok
        })
        .count() as u64;
    assert!(
        wilson_upper_99(violations, seeds) <= bound,
        "{violations}/{seeds} vs {bound}"
    );
}

//! Property tests over random instances. Each case draws its objects from a seeded
//! stream, so a shrunk failure reproduces from the printed seed.

use proptest::prelude::*;
use qdecouple_core::channels::{
    channel_output, coherent_information_channel, environment_output, holevo_chi,
    standard_channel, ChannelFamily, Ensemble, StinespringIsometry,
};
use qdecouple_core::codes::{
    build_random_code, gram_matrix, measured_diagnostics, orthonormality_residual,
    parseval_residual, sqrt_trick_slack,
};
use qdecouple_core::decode::{
    audit_basis, decoupling_audit, helstrom_error, pgm_error, InformationAudit,
};
use qdecouple_core::qit::{
    entropy, fourier_matrix, hermitian_eigen, kron, operator_function, purify,
    coherent_information_state, reduced_from_pure, trace_distance, CMatrix, DensityOperator,
    Operator, PureState, SystemSplit,
};
use qdecouple_core::random::{
    random_density, random_isometry, random_pure, random_unitary,
};
use qdecouple_core::rng::{stream, StreamRng};
use qdecouple_core::typicality::{spectrum_report, typical_projector};
use rand::Rng;

fn rng(seed: u64) -> StreamRng {
    stream(seed, "invariants", 0)
}

fn conj(u: &CMatrix, rho: &DensityOperator) -> DensityOperator {
    DensityOperator::new(u * rho.matrix() * u.adjoint()).unwrap()
}

fn random_channel(r: &mut StreamRng, da: usize, db: usize, de: usize) -> StinespringIsometry {
    StinespringIsometry::new(random_isometry(db * de, da, r), db, de).unwrap()
}

fn basis_from_columns(m: &CMatrix) -> Vec<PureState> {
    (0..m.ncols())
        .map(|j| PureState::new(m.column(j).into_owned()).unwrap())
        .collect()
}

fn check_audit(a: &InformationAudit) -> Result<(), TestCaseError> {
    prop_assert!(a.duality_residual.abs() <= 1e-9, "duality {}", a.duality_residual);
    prop_assert!(a.uncertainty_slack >= -1e-8, "uncertainty {}", a.uncertainty_slack);
    prop_assert!(a.pinsker_slack >= -1e-8, "pinsker {}", a.pinsker_slack);
    prop_assert!(a.fano_slack() >= -1e-8, "fano {}", a.fano_slack());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tripartite_duality_and_pinsker(seed in any::<u64>(), dr in 1usize..=4, db in 1usize..=4, de in 1usize..=4) {
        let mut r = rng(seed);
        let psi = random_pure(dr * db * de, &mut r);
        let split = SystemSplit::new(vec![dr, db, de]).unwrap();
        let h = |keep: &[usize]| {
            entropy(&DensityOperator::new(reduced_from_pure(psi.vector(), &split, keep).unwrap()).unwrap())
        };
        let (hr, hb, he) = (h(&[0]), h(&[1]), h(&[2]));
        let i_rb = hr + hb - h(&[0, 1]);
        let i_re = hr + he - h(&[0, 2]);
        prop_assert!((2.0 * hr - i_rb - i_re).abs() <= 1e-9);

        // Pinsker on the reference/environment marginal of a state with maximally mixed reference
        prop_assume!(db * de >= dr);
        let w = random_isometry(db * de, dr, &mut r);
        let mut phi = qdecouple_core::qit::CVector::zeros(dr * db * de);
        for j in 0..dr {
            let col = w.column(j).unscale((dr as f64).sqrt());
            phi.rows_mut(j * db * de, db * de).copy_from(&col);
        }
        let re = reduced_from_pure(&phi, &split, &[0, 2]).unwrap();
        let audit = decoupling_audit(&DensityOperator::new(re).unwrap(), dr).unwrap();
        prop_assert!(audit.pinsker_slack >= -1e-8);
        // error-to-decoupling form
        let t = audit.mutual_information_nats;
        prop_assert!(audit.decoupling_distance <= 2.0 * t.max(0.0).sqrt() + 1e-8);
    }

    #[test]
    fn entropy_unitary_invariance(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=d);
        let rho = random_density(d, rank, &mut r);
        let u = random_unitary(d, &mut r);
        prop_assert!((entropy(&rho) - entropy(&conj(&u, &rho))).abs() <= 1e-9);
    }

    #[test]
    fn trace_distance_is_a_metric(seed in any::<u64>(), d in 1usize..=6) {
        let mut r = rng(seed);
        let a = random_density(d, d, &mut r);
        let b = random_density(d, 1, &mut r);
        let c = random_density(d, (d + 1) / 2, &mut r);
        let ab = trace_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, trace_distance(&b, &a).unwrap());
        let ac = trace_distance(&a, &c).unwrap();
        let cb = trace_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert!(trace_distance(&a, &a).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn operator_function_identity_restricts_to_support(seed in any::<u64>(), d in 1usize..=8) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=d);
        let rho = random_density(d, rank, &mut r);
        let same = operator_function(&rho, |x| x);
        prop_assert!((same.matrix() - rho.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn complementarity_and_coherent_information(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3, de in 1usize..=3) {
        prop_assume!(db * de >= da);
        let mut r = rng(seed);
        let v = random_channel(&mut r, da, db, de);
        let psi = random_pure(da, &mut r);
        let pure = DensityOperator::pure(&psi);
        let hb = entropy(&channel_output(&v, &pure).unwrap());
        let he = entropy(&environment_output(&v, &pure).unwrap());
        prop_assert!((hb - he).abs() <= 1e-9);

        // dilation route against the purification route
        let rho = random_density(da, da, &mut r);
        let ic = coherent_information_channel(&rho, &v).unwrap();
        let phi = purify(&rho);
        let mut big = qdecouple_core::qit::CVector::zeros(da * db * de);
        for i in 0..da {
            let slice = phi.vector().rows(i * da, da).into_owned();
            let out = v.apply(&slice).unwrap();
            big.rows_mut(i * db * de, db * de).copy_from(&out);
        }
        let split = SystemSplit::new(vec![da, db, de]).unwrap();
        let omega = DensityOperator::new(reduced_from_pure(&big, &split, &[0, 1]).unwrap()).unwrap();
        let via_state = coherent_information_state(&omega, &SystemSplit::bipartite(da, db)).unwrap();
        prop_assert!((ic - via_state).abs() <= 1e-9);

        let id = standard_channel(ChannelFamily::Identity, da).unwrap();
        prop_assert!((coherent_information_channel(&rho, &id).unwrap() - entropy(&rho)).abs() <= 1e-9);
    }

    #[test]
    fn holevo_unitary_invariance(seed in any::<u64>(), d in 2usize..=5, k in 2usize..=4) {
        let mut r = rng(seed);
        let states: Vec<DensityOperator> = (0..k).map(|_| {
            let rank = r.random_range(1..=d);
            random_density(d, rank, &mut r)
        }).collect();
        let u = random_unitary(d, &mut r);
        let rotated: Vec<DensityOperator> = states.iter().map(|s| conj(&u, s)).collect();
        let a = holevo_chi(&Ensemble::uniform_states(&states).unwrap()).unwrap();
        let b = holevo_chi(&Ensemble::uniform_states(&rotated).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn code_construction_invariants(seed in any::<u64>(), d in 2usize..=24, frac in 0.1f64..1.0) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=d);
        let rho = random_density(d, rank, &mut r);
        let n = ((frac * rank as f64).ceil() as usize).clamp(1, rank);
        let code = build_random_code(&rho, n, seed).unwrap();
        prop_assert!(orthonormality_residual(&code) <= 1e-8);
        prop_assert!(parseval_residual(&code) <= 1e-10);
        prop_assert!(sqrt_trick_slack(&code) >= -1e-10);
        let diag = measured_diagnostics(&code);
        prop_assert!(diag.min_overlap >= -1e-12);
        prop_assert!(diag.max_overlap_imag <= 1e-10);
        prop_assert!(diag.sqrt_trace_deficit <= diag.quadratic_upper + 1e-10);
        let s = gram_matrix(&code);
        prop_assert_eq!(s.nrows(), n);
    }

    #[test]
    fn uncertainty_on_adversarial_bases(seed in any::<u64>(), da in 2usize..=4, db in 1usize..=4, de in 1usize..=8, nn in 1usize..=4) {
        prop_assume!(db * de >= da);
        let n = nn.min(da);
        let mut r = rng(seed);
        let v = random_channel(&mut r, da, db, de);
        let w = random_isometry(da, n, &mut r);
        // the subspace's own basis, its Fourier rotation, and a basis aligned with
        // the eigenvectors of the compressed channel output
        let out = channel_output(&v, &DensityOperator::maximally_mixed(da)).unwrap();
        let compressed = w.adjoint() * reduce_to_a(&v, out.matrix()) * &w;
        let aligned = hermitian_eigen(&compressed).vectors;
        for rot in [CMatrix::identity(n, n), fourier_matrix(n).unwrap(), aligned] {
            let basis = basis_from_columns(&(&w * rot));
            check_audit(&audit_basis(&basis, &v).unwrap())?;
        }
    }

    #[test]
    fn pgm_never_beats_helstrom(seed in any::<u64>(), d in 2usize..=3) {
        let mut r = rng(seed);
        let r0 = r.random_range(1..=d);
        let r1 = r.random_range(1..=d);
        let a = random_density(d, r0, &mut r);
        let b = random_density(d, r1, &mut r);
        let pgm = pgm_error(&Ensemble::uniform_states(&[a.clone(), b.clone()]).unwrap()).unwrap();
        prop_assert!(pgm >= helstrom_error(&a, &b).unwrap() - 1e-10);
    }

    #[test]
    fn typical_set_sandwich(p in 0.01f64..0.99, n in 1usize..=30, delta in 0.01f64..0.5) {
        let t = typical_projector(&[p, 1.0 - p], n, delta).unwrap();
        for class in &t.types {
            if class.typical {
                let rate = -class.log_prob / n as f64;
                prop_assert!((rate - t.entropy).abs() <= delta + 1e-12);
            }
        }
        let rep = spectrum_report(&[p, 1.0 - p], n, delta).unwrap();
        prop_assert!(rep.dim_ok && rep.operator_ok);
        prop_assert!((t.typical_weight() + t.truncation_weight() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn streams_are_deterministic(seed in any::<u64>(), index in any::<u64>()) {
        let a: Vec<u64> = (0..8).map({ let mut s = stream(seed, "det", index); move |_| s.random() }).collect();
        let b: Vec<u64> = (0..8).map({ let mut s = stream(seed, "det", index); move |_| s.random() }).collect();
        prop_assert_eq!(a, b);
    }
}

/// Pulls an output-space operator back to the input through `V† (X ⊗ 1) V`.
fn reduce_to_a(v: &StinespringIsometry, x: &CMatrix) -> CMatrix {
    let lifted = kron(x, &CMatrix::identity(v.dim_e(), v.dim_e()));
    v.matrix().adjoint() * lifted * v.matrix()
}

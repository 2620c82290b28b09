use std::f64::consts::LN_2;

use super::linalg::{hermitian_eigen, hermitian_eigenvalues, partial_trace_matrix};
use super::types::{CMatrix, DensityOperator, Operator, SystemSplit};
use crate::error::{Error, Result};
use crate::tol;

/// `-Σ λ log₂ λ` over a spectrum; entries in `[-τ_psd, 0)` count as zero.
pub fn entropy_of_spectrum(values: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &v in values {
        if v < -tol::PSD {
            return Err(Error::NotPositive { min_eigenvalue: v });
        }
        if v > 0.0 {
            h -= v * v.log2();
        }
    }
    Ok(h.max(0.0))
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(&hermitian_eigenvalues(rho.matrix()))
        .expect("density operators are positive by construction")
}

/// Entropy of a Hermitian matrix produced by a reduction; errors if it is not positive.
pub(crate) fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    entropy_of_spectrum(&hermitian_eigenvalues(m))
}

/// `H₂(x) = -x log₂ x - (1-x) log₂(1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange {
            what: "binary entropy argument",
            value: x,
            range: "[0, 1]",
        });
    }
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    Ok(term(x) + term(1.0 - x))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

/// Unhalved trace distance `‖a − b‖₁`.
pub fn trace_distance(a: &impl Operator, b: &impl Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    // Fix the operand order so the result is bitwise symmetric in (a, b).
    let (x, y) = if precedes(a.matrix(), b.matrix()) {
        (a.matrix(), b.matrix())
    } else {
        (b.matrix(), a.matrix())
    };
    Ok(trace_norm_hermitian(&(x - y)))
}

fn precedes(a: &CMatrix, b: &CMatrix) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

/// `D(ρ‖σ)` in nats; `+∞` if the support of ρ is not inside the support of σ.
pub fn relative_entropy_nats(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let r = hermitian_eigen(rho.matrix());
    let s = hermitian_eigen(sigma.matrix());
    let neg_entropy: f64 = r
        .values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum();
    let cut = s.support_cutoff();
    let mut cross = 0.0;
    for (j, &mu) in s.values.iter().enumerate() {
        let col = s.vectors.column(j);
        let weight = (col.adjoint() * rho.matrix() * col)[(0, 0)].re;
        if mu > cut && mu > 0.0 {
            cross += weight * mu.ln();
        } else if weight > tol::SUPPORT {
            return Ok(f64::INFINITY);
        }
    }
    Ok((neg_entropy - cross).max(0.0))
}

/// `D(ρ‖σ)` in bits.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    Ok(relative_entropy_nats(rho, sigma)? / LN_2)
}

fn bipartite(split: &SystemSplit, dim: usize) -> Result<()> {
    split.check(dim)?;
    if split.len() != 2 {
        return Err(Error::Invalid(format!(
            "expected a bipartite split, got {} factors",
            split.len()
        )));
    }
    Ok(())
}

/// `H(A) + H(B) − H(AB)` for a bipartite state.
pub fn mutual_information(rho: &DensityOperator, split: &SystemSplit) -> Result<f64> {
    bipartite(split, rho.dim())?;
    let ha = matrix_entropy(&partial_trace_matrix(rho.matrix(), split, &[0])?)?;
    let hb = matrix_entropy(&partial_trace_matrix(rho.matrix(), split, &[1])?)?;
    Ok(ha + hb - entropy(rho))
}

/// `I(A⟩B) = H(B) − H(AB)`.
pub fn coherent_information_state(rho: &DensityOperator, split: &SystemSplit) -> Result<f64> {
    bipartite(split, rho.dim())?;
    let hb = matrix_entropy(&partial_trace_matrix(rho.matrix(), split, &[1])?)?;
    Ok(hb - entropy(rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qit::{
        maximally_entangled, partial_trace, tensor_product, PositiveOperator, PureState,
    };
    use crate::random;
    use crate::rng::stream;

    #[test]
    fn entropy_cases() {
        assert!((entropy(&DensityOperator::maximally_mixed(2)) - 1.0).abs() < 1e-14);
        let mut rng = stream(1, "ent", 0);
        let pure = DensityOperator::pure(&random::random_pure(4, &mut rng));
        assert!(entropy(&pure).abs() < 1e-10);
        let d = DensityOperator::from_diagonal(&[0.2, 0.8]).unwrap();
        // -0.2 log2 0.2 - 0.8 log2 0.8
        let expect = 0.2 * 5f64.log2() + 0.8 * (1.25f64).log2();
        assert!((entropy(&d) - expect).abs() < 1e-14);
        assert!((expect - 0.721928).abs() < 1e-6);
    }

    #[test]
    fn negative_spectrum_rejected() {
        assert!(entropy_of_spectrum(&[1.0, -1e-3]).is_err());
        assert_eq!(entropy_of_spectrum(&[1.0, -1e-12]).unwrap(), 0.0);
    }

    #[test]
    fn binary_entropy_cases() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!(binary_entropy(x).unwrap() <= 2.0 * (x * (1.0 - x)).sqrt() + 1e-15);
        }
    }

    #[test]
    fn trace_distance_cases() {
        let mut rng = stream(2, "td", 0);
        let a = random::random_density(3, 3, &mut rng);
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-15);
        let p0 = PureState::basis(2, 0).projector();
        let p1 = PureState::basis(2, 1).projector();
        assert!((trace_distance(&p0, &p1).unwrap() - 2.0).abs() < 1e-14);
        assert!(trace_distance(&p0, &PositiveOperator::identity(3)).is_err());
    }

    #[test]
    fn rank_one_trace_vs_hilbert_schmidt() {
        let mut rng = stream(3, "td1", 0);
        for _ in 0..200 {
            let phi = random::random_pure(5, &mut rng).projector();
            let gam = random::random_gaussian_vector(5, &mut rng).projector();
            let diff = phi.matrix() - gam.matrix();
            let tn = trace_norm_hermitian(&diff);
            let hs = diff.norm();
            assert!(0.5 * tn <= std::f64::consts::FRAC_1_SQRT_2 * hs + 1e-12);
        }
    }

    #[test]
    fn relative_entropy_cases() {
        let mut rng = stream(4, "rel", 0);
        let rho = random::random_density(3, 3, &mut rng);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-10);
        let zero = DensityOperator::from_diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityOperator::maximally_mixed(2);
        assert!((relative_entropy(&zero, &mixed).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(relative_entropy(&mixed, &zero).unwrap(), f64::INFINITY);
    }

    #[test]
    fn pinsker_in_nats() {
        let mut rng = stream(5, "pinsker", 0);
        for i in 0..500 {
            let d = 2 + i % 4;
            let rho = random::random_density(d, 1 + i % d, &mut rng);
            let sigma = random::random_density(d, d, &mut rng);
            let dn = relative_entropy_nats(&rho, &sigma).unwrap();
            let half = 0.5 * trace_distance(&rho, &sigma).unwrap();
            assert!(dn >= half * half - 1e-10, "{dn} < {}", half * half);
        }
    }

    #[test]
    fn mutual_information_cases() {
        let mut rng = stream(6, "mi", 0);
        let a = random::random_density(2, 2, &mut rng);
        let b = random::random_density(3, 2, &mut rng);
        let prod = tensor_product(&a, &b).normalized().unwrap();
        let split = SystemSplit::bipartite(2, 3);
        assert!(mutual_information(&prod, &split).unwrap().abs() < 1e-10);
        for n in 2..5 {
            let phi = DensityOperator::pure(&maximally_entangled(n).unwrap());
            let mi = mutual_information(&phi, &SystemSplit::bipartite(n, n)).unwrap();
            assert!((mi - 2.0 * (n as f64).log2()).abs() < 1e-10);
        }
        assert!(mutual_information(&prod, &SystemSplit::new(vec![6]).unwrap()).is_err());
    }

    #[test]
    fn mutual_information_is_relative_entropy_to_product() {
        let mut rng = stream(7, "mi-d", 0);
        let split = SystemSplit::bipartite(2, 3);
        for _ in 0..20 {
            let rho = random::random_density(6, 4, &mut rng);
            let ra = partial_trace(&rho, &split, &[0]).unwrap();
            let rb = partial_trace(&rho, &split, &[1]).unwrap();
            let prod = tensor_product(&ra, &rb).normalized().unwrap();
            let d = relative_entropy(&rho, &prod).unwrap();
            let mi = mutual_information(&rho, &split).unwrap();
            assert!((d - mi).abs() < 1e-9, "{d} vs {mi}");
        }
    }

    #[test]
    fn coherent_information_cases() {
        for n in 2..5 {
            let phi = DensityOperator::pure(&maximally_entangled(n).unwrap());
            let ic = coherent_information_state(&phi, &SystemSplit::bipartite(n, n)).unwrap();
            assert!((ic - (n as f64).log2()).abs() < 1e-10);
        }
        let mut rng = stream(8, "ic", 0);
        let a = random::random_density(2, 2, &mut rng);
        let b = random::random_density(2, 2, &mut rng);
        let prod = tensor_product(&a, &b).normalized().unwrap();
        let ic = coherent_information_state(&prod, &SystemSplit::bipartite(2, 2)).unwrap();
        assert!((ic + entropy(&a)).abs() < 1e-10);
        for _ in 0..50 {
            let rho = random::random_density(4, 1 + rand::Rng::random_range(&mut rng, 0..4), &mut rng);
            let split = SystemSplit::bipartite(2, 2);
            let ic = coherent_information_state(&rho, &split).unwrap();
            let ha = matrix_entropy(&partial_trace_matrix(rho.matrix(), &split, &[0]).unwrap()).unwrap();
            let hb = matrix_entropy(&partial_trace_matrix(rho.matrix(), &split, &[1]).unwrap()).unwrap();
            assert!(ic >= -ha - 1e-10 && ic <= hb + 1e-10);
        }
    }

    #[test]
    fn entropy_unitarily_invariant() {
        let mut rng = stream(9, "uinv", 0);
        for _ in 0..20 {
            let rho = random::random_density(5, 3, &mut rng);
            let u = random::random_unitary(5, &mut rng);
            let rot = DensityOperator::new(&u * rho.matrix() * u.adjoint()).unwrap();
            assert!((entropy(&rho) - entropy(&rot)).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_distance_is_a_metric() {
        let mut rng = stream(10, "metric", 0);
        for _ in 0..100 {
            let a = random::random_density(3, 2, &mut rng);
            let b = random::random_density(3, 3, &mut rng);
            let c = random::random_density(3, 1, &mut rng);
            let ab = trace_distance(&a, &b).unwrap();
            assert_eq!(ab, trace_distance(&b, &a).unwrap());
            let ac = trace_distance(&a, &c).unwrap();
            let cb = trace_distance(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-9);
        }
    }
}

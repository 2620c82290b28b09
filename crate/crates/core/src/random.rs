//! Random matrices and states used by audits and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::qit::{CMatrix, CVector, DensityOperator, PositiveOperator, PureState, C64};

/// Complex normal with `E|z|² = variance`.
pub fn complex_normal<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(1.0, rng))
}

/// Gaussian vector with i.i.d. `N_C(0, 1/D)` coefficients.
pub fn random_gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    let var = 1.0 / dim as f64;
    PureState::from_vector(CVector::from_fn(dim, |_, _| complex_normal(var, rng)))
}

pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    let g = random_gaussian_vector(dim, rng);
    PureState::from_vector(g.normalized_vector())
}

/// Haar-random isometry `cols → rows` (QR of a Ginibre matrix with phase fix).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let qr = ginibre(rows, cols, rng).qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q;
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            out[(i, j)] *= phase;
        }
    }
    out
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    random_isometry(dim, dim, rng)
}

/// Unnormalized Wishart-type PSD matrix of the given rank.
pub fn random_psd_of_rank<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> PositiveOperator {
    let g = ginibre(dim, rank, rng);
    PositiveOperator::from_psd(&g * g.adjoint())
}

pub fn random_positive<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PositiveOperator {
    random_psd_of_rank(dim, dim, rng)
}

/// Random state of the given rank (induced measure from a Ginibre matrix).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityOperator {
    random_psd_of_rank(dim, rank.max(1), rng)
        .normalized()
        .expect("nonzero Wishart matrix")
}

/// Random positive operator `0 ⪯ X ⪯ 1`.
pub fn random_effect<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PositiveOperator {
    let u = random_unitary(dim, rng);
    let d = CVector::from_fn(dim, |_, _| C64::new(rng.random::<f64>(), 0.0));
    PositiveOperator::from_psd(&u * CMatrix::from_diagonal(&d) * u.adjoint())
}

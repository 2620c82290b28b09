//! Random subspace codes from Gaussian seeds.
//!
//! Seeds `gⱼ` are distorted to `γⱼ = √(|Ã|ρ̃) gⱼ`, orthonormalized through the frame
//! operator `Γ = Σⱼ |γⱼ⟩⟨γⱼ|` as `φⱼ = Γ^{-1/2} γⱼ`, and paired with the Fourier-conjugate
//! basis `φ̂ₖ`. Both bases span the same subspace.

use serde::{Deserialize, Serialize};

use crate::dump::{self, Pair};
use crate::error::{Error, Result};
use crate::gaussian::{fourier_conjugate_family, GaussianSampler};
use crate::qit::{
    fourier_matrix, hermitian_eigen, identity, operator_function, outer,
    CMatrix, CVector, DensityOperator, Operator, PositiveOperator, PureState,
};
use crate::tol;

/// Substream label of the Gaussian seeds of a code.
pub const SEED_LABEL: &str = "code/gaussian";

#[derive(Debug, Clone)]
pub struct SubspaceCode {
    n: usize,
    rho_tilde: DensityOperator,
    g: Vec<PureState>,
    gamma: Vec<PureState>,
    frame: PositiveOperator,
    phi: Vec<PureState>,
    phi_hat: Vec<PureState>,
    seed: u64,
    distortion: PositiveOperator,
    inv_sqrt_frame: PositiveOperator,
    frame_spectrum: Vec<f64>,
}

/// Draws `N` Gaussian seeds in the space of `ρ̃` and builds the code.
pub fn build_random_code(rho_tilde: &DensityOperator, n: usize, seed: u64) -> Result<SubspaceCode> {
    let d = rho_tilde.dim();
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "code dimension",
            value: 0.0,
            range: ">= 1",
        });
    }
    let rank = hermitian_eigen(rho_tilde.matrix()).rank();
    if n > rank {
        return Err(Error::CodeTooLarge { requested: n, rank });
    }
    let mut sampler = GaussianSampler::new(d, seed, SEED_LABEL, 0)?;
    let g = sampler.sample_many(n);
    code_from_seeds(rho_tilde, g, seed)
}

/// Builds the code from given seed vectors (used for fixtures and adversarial bases).
pub fn code_from_seeds(
    rho_tilde: &DensityOperator,
    g: Vec<PureState>,
    seed: u64,
) -> Result<SubspaceCode> {
    let d = rho_tilde.dim();
    let n = g.len();
    if n == 0 {
        return Err(Error::EmptyFamily);
    }
    if let Some(bad) = g.iter().find(|v| v.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    let distortion = operator_function(&rho_tilde.as_positive().scaled(d as f64), f64::sqrt);
    let gamma: Vec<PureState> = g
        .iter()
        .map(|v| PureState::from_vector(distortion.matrix() * v.vector()))
        .collect();
    let frame = frame_operator(&gamma);
    // Γ = GG† and S = G†G share their nonzero spectrum; Γ^{-1/2} = G S^{-3/2} G† on the support
    let cols = columns(&gamma);
    let s = cols.adjoint() * &cols;
    let eig_s = hermitian_eigen(&((&s + s.adjoint()).unscale(2.0)));
    let rank = eig_s.rank();
    if rank < n {
        return Err(Error::DegenerateCode {
            seed,
            rank,
            requested: n,
        });
    }
    let cut = eig_s.support_cutoff();
    let s_pow = eig_s.map(|x| if x > cut && x > 0.0 { x.powf(-1.5) } else { 0.0 });
    let inv_sqrt_frame = PositiveOperator::from_psd(&cols * s_pow * cols.adjoint());
    let frame_spectrum = eig_s.values;
    // φⱼ = Γ^{-1/2} γⱼ is column j of the polar factor G S^{-1/2} = U V†, which the SVD
    // keeps orthonormal however ill-conditioned S is
    let svd = cols.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(Error::DegenerateCode {
                seed,
                rank,
                requested: n,
            })
        }
    };
    let polar = u * v_t;
    let phi: Vec<PureState> = (0..n)
        .map(|j| PureState::from_vector(polar.column(j).into_owned()))
        .collect();
    let phi_hat = fourier_conjugate_family(&phi)?;
    Ok(SubspaceCode {
        n,
        rho_tilde: rho_tilde.clone(),
        g,
        gamma,
        frame,
        phi,
        phi_hat,
        seed,
        distortion,
        inv_sqrt_frame,
        frame_spectrum,
    })
}

/// `Σⱼ |vⱼ⟩⟨vⱼ|`.
pub fn frame_operator(v: &[PureState]) -> PositiveOperator {
    let d = v.first().map_or(0, |x| x.dim());
    PositiveOperator::from_psd(
        v.iter()
            .fold(CMatrix::zeros(d, d), |acc, x| acc + outer(x.vector(), x.vector())),
    )
}

fn columns(v: &[PureState]) -> CMatrix {
    let d = v.first().map_or(0, |x| x.dim());
    CMatrix::from_fn(d, v.len(), |r, c| v[c].vector()[r])
}

impl SubspaceCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.rho_tilde.dim()
    }

    pub fn rho_tilde(&self) -> &DensityOperator {
        &self.rho_tilde
    }

    pub fn seeds(&self) -> &[PureState] {
        &self.g
    }

    pub fn gamma(&self) -> &[PureState] {
        &self.gamma
    }

    /// `Γ = Σⱼ |γⱼ⟩⟨γⱼ|`.
    pub fn frame(&self) -> &PositiveOperator {
        &self.frame
    }

    pub fn phi(&self) -> &[PureState] {
        &self.phi
    }

    pub fn phi_hat(&self) -> &[PureState] {
        &self.phi_hat
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `√(|Ã| ρ̃)`.
    pub fn distortion(&self) -> &PositiveOperator {
        &self.distortion
    }

    /// `Γ^{-1/2}` on the support of `Γ`.
    pub fn inverse_sqrt_frame(&self) -> &PositiveOperator {
        &self.inv_sqrt_frame
    }

    /// Projector onto the code space, `Σⱼ |φⱼ⟩⟨φⱼ|`.
    /// Nonzero part of the spectrum of `Γ` (the eigenvalues of the Gram matrix), ascending.
    /// The other `ambient_dim − N` eigenvalues of `Γ` are zero.
    pub fn frame_spectrum(&self) -> &[f64] {
        &self.frame_spectrum
    }

    pub fn code_projector(&self) -> PositiveOperator {
        frame_operator(&self.phi)
    }

    pub fn to_dump(&self) -> CodeDump {
        CodeDump {
            n: self.n,
            ambient_dim: self.ambient_dim(),
            seed: self.seed,
            rho_tilde: dump::matrix_pairs(self.rho_tilde.matrix()),
            g: dump::states_pairs(&self.g),
            gamma: dump::states_pairs(&self.gamma),
            phi: dump::states_pairs(&self.phi),
            phi_hat: dump::states_pairs(&self.phi_hat),
        }
    }
}

/// JSON debug dump of a code with amplitudes as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDump {
    pub n: usize,
    pub ambient_dim: usize,
    pub seed: u64,
    pub rho_tilde: Vec<Vec<Pair>>,
    pub g: Vec<Vec<Pair>>,
    pub gamma: Vec<Vec<Pair>>,
    pub phi: Vec<Vec<Pair>>,
    pub phi_hat: Vec<Vec<Pair>>,
}

impl CodeDump {
    /// Rebuilds the code from the stored seeds and `ρ̃`.
    pub fn rebuild(&self) -> Result<SubspaceCode> {
        let rho = DensityOperator::new(dump::matrix_from_pairs(&self.rho_tilde))?;
        let g = self
            .g
            .iter()
            .map(|v| PureState::new(dump::vector_from_pairs(v)))
            .collect::<Result<Vec<_>>>()?;
        code_from_seeds(&rho, g, self.seed)
    }

    /// Largest amplitude difference over all stored families.
    pub fn max_deviation(&self, other: &CodeDump) -> f64 {
        let fam = |a: &Vec<Vec<Pair>>, b: &Vec<Vec<Pair>>| -> f64 {
            if a.len() != b.len() {
                return f64::INFINITY;
            }
            a.iter()
                .zip(b)
                .flat_map(|(x, y)| {
                    if x.len() != y.len() {
                        vec![f64::INFINITY]
                    } else {
                        x.iter()
                            .zip(y)
                            .map(|(p, q)| (dump::unpair(*p) - dump::unpair(*q)).norm())
                            .collect()
                    }
                })
                .fold(0.0, f64::max)
        };
        [
            fam(&self.rho_tilde, &other.rho_tilde),
            fam(&self.g, &other.g),
            fam(&self.gamma, &other.gamma),
            fam(&self.phi, &other.phi),
            fam(&self.phi_hat, &other.phi_hat),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `Sⱼₖ = ⟨γⱼ|γₖ⟩`.
pub fn gram_matrix(code: &SubspaceCode) -> CMatrix {
    let g = columns(&code.gamma);
    let s = g.adjoint() * g;
    (&s + s.adjoint()).unscale(2.0)
}

/// Deviations measured from a Gram matrix: `ε = maxⱼ |Sⱼⱼ − 1|` and
/// `η = maxⱼ Σ_{k≠j} |Sⱼₖ|² / (1+ε)²`, the smallest values for which the length
/// and cross-term bounds hold.
pub fn measured_parameters(s: &CMatrix) -> (f64, f64) {
    let n = s.nrows();
    let eps = (0..n).map(|j| (s[(j, j)].re - 1.0).abs()).fold(0.0, f64::max);
    let cross = max_cross_term(s);
    (eps, cross / ((1.0 + eps) * (1.0 + eps)))
}

fn max_cross_term(s: &CMatrix) -> f64 {
    let n = s.nrows();
    (0..n)
        .map(|j| {
            (0..n)
                .filter(|&k| k != j)
                .map(|k| s[(j, k)].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `‖|a⟩⟨a| − |b⟩⟨b|‖₁` for unnormalized vectors.
pub fn rank_one_trace_distance(a: &CVector, b: &CVector) -> f64 {
    let na = a.norm_squared();
    let nb = b.norm_squared();
    let ov = a.dotc(b).norm_sqr();
    ((na + nb) * (na + nb) - 4.0 * ov).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDiagnostics {
    pub epsilon: f64,
    pub eta: f64,
    pub min_length: f64,
    pub max_length: f64,
    /// `maxⱼ Σ_{k≠j} |Sⱼₖ|²`.
    pub max_cross_term: f64,
    #[serde(with = "dump::matrix")]
    pub gram: CMatrix,
    /// `(1/N) Σⱼ ½‖φⱼ − γⱼ‖₁` on the rank-one projectors.
    pub perturbation_avg: f64,
    /// `3√ε + 3√η`.
    pub bound_value: f64,
    /// Every `|⟨γⱼ|γⱼ⟩ − 1| ≤ ε`.
    pub length_ok: bool,
    /// Every `Σ_{k≠j} |Sⱼₖ|² ≤ (1+ε)² η`.
    pub cross_ok: bool,
    /// `ε ≤ 1/3`, `length_ok` and `cross_ok`: the bound is claimed.
    pub applicable: bool,
    pub bound_holds: bool,
    /// `(1/N) Σⱼ (1 − |⟨φⱼ|γⱼ⟩|)`.
    pub overlap_deficit: f64,
    /// `1 − (1/N) tr √Γ`.
    pub sqrt_trace_deficit: f64,
    /// `(1/N)[N − (3/2) Σⱼ Sⱼⱼ + (1/2) Σⱼₖ |Sⱼₖ|²]`.
    pub quadratic_upper: f64,
    /// `ε + ε(1+ε)/2 + (1+ε)² η`.
    pub average_upper: f64,
    /// `minⱼ ⟨φⱼ|γⱼ⟩` real part; the overlaps are real and nonnegative.
    pub min_overlap: f64,
    pub max_overlap_imag: f64,
}

/// Evaluates the perturbation chain from `φⱼ` to `γⱼ` at the given `(ε, η)`.
/// Violations are recorded in the flags, never raised.
pub fn code_diagnostics(code: &SubspaceCode, epsilon: f64, eta: f64) -> CodeDiagnostics {
    let s = gram_matrix(code);
    let n = code.n;
    let nf = n as f64;
    let lengths: Vec<f64> = (0..n).map(|j| s[(j, j)].re).collect();
    let min_length = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let max_length = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_cross = max_cross_term(&s);
    let length_ok = lengths.iter().all(|l| (l - 1.0).abs() <= epsilon);
    let cross_ok = max_cross / ((1.0 + epsilon) * (1.0 + epsilon)) <= eta;
    let applicable = length_ok && cross_ok && epsilon <= 1.0 / 3.0;

    let mut pert = 0.0;
    let mut deficit = 0.0;
    let mut min_overlap = f64::INFINITY;
    let mut max_imag: f64 = 0.0;
    for (phi, gamma) in code.phi.iter().zip(&code.gamma) {
        pert += 0.5 * rank_one_trace_distance(phi.vector(), gamma.vector());
        let ov = phi.inner(gamma);
        deficit += 1.0 - ov.norm();
        min_overlap = min_overlap.min(ov.re);
        max_imag = max_imag.max(ov.im.abs());
    }
    let spec = &code.frame_spectrum;
    let cut = tol::SUPPORT * spec.last().copied().unwrap_or(0.0).max(0.0);
    let sqrt_trace: f64 = spec.iter().filter(|&&x| x > cut).map(|x| x.sqrt()).sum();
    let frob: f64 = s.iter().map(|z| z.norm_sqr()).sum();
    let quadratic_upper = (nf - 1.5 * lengths.iter().sum::<f64>() + 0.5 * frob) / nf;
    let bound_value = 3.0 * epsilon.max(0.0).sqrt() + 3.0 * eta.max(0.0).sqrt();
    let perturbation_avg = pert / nf;
    CodeDiagnostics {
        epsilon,
        eta,
        min_length,
        max_length,
        max_cross_term: max_cross,
        gram: s,
        perturbation_avg,
        bound_value,
        length_ok,
        cross_ok,
        applicable,
        bound_holds: perturbation_avg <= bound_value,
        overlap_deficit: deficit / nf,
        sqrt_trace_deficit: 1.0 - sqrt_trace / nf,
        quadratic_upper,
        average_upper: epsilon + epsilon * (1.0 + epsilon) / 2.0 + (1.0 + epsilon).powi(2) * eta,
        min_overlap,
        max_overlap_imag: max_imag,
    }
}

/// Diagnostics at the measured `(ε, η)` of the code itself.
pub fn measured_diagnostics(code: &SubspaceCode) -> CodeDiagnostics {
    let (eps, eta) = measured_parameters(&gram_matrix(code));
    code_diagnostics(code, eps, eta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateReport {
    /// `max |γ̂ₖ − (F γ)ₖ|` with `γ̂ₖ = √(|Ã|ρ̃) ĝₖ`.
    pub gamma_hat_residual: f64,
    /// `max |Γ̂ − Γ|`.
    pub frame_residual: f64,
    /// `max |φ̂ₖ − Γ^{-1/2} γ̂ₖ|`.
    pub phi_hat_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks that the conjugate basis is the same construction applied to the conjugate seeds.
pub fn conjugate_consistency(code: &SubspaceCode) -> Result<ConjugateReport> {
    let g_hat = fourier_conjugate_family(&code.g)?;
    let gamma_hat: Vec<CVector> = g_hat
        .iter()
        .map(|v| code.distortion.matrix() * v.vector())
        .collect();
    let f_gamma = fourier_conjugate_family(&code.gamma)?;
    let max_vec = |a: &CVector, b: &CVector| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let gamma_hat_residual = gamma_hat
        .iter()
        .zip(&f_gamma)
        .map(|(a, b)| max_vec(a, b.vector()))
        .fold(0.0, f64::max);
    let d = code.ambient_dim();
    let frame_hat = gamma_hat
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, x| acc + outer(x, x));
    let frame_residual = (frame_hat - code.frame.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let phi_hat_residual = gamma_hat
        .iter()
        .zip(&code.phi_hat)
        .map(|(gh, ph)| max_vec(&(code.inv_sqrt_frame.matrix() * gh), ph.vector()))
        .fold(0.0, f64::max);
    let tolerance = 1e-10;
    Ok(ConjugateReport {
        gamma_hat_residual,
        frame_residual,
        phi_hat_residual,
        tolerance,
        passed: gamma_hat_residual <= tolerance
            && frame_residual <= tolerance
            && phi_hat_residual <= tolerance,
    })
}

/// `U: C^N → C^{|Ã|}` with `U|j⟩ = |φⱼ⟩`.
pub fn encoder_isometry(code: &SubspaceCode) -> Result<CMatrix> {
    let u = columns(&code.phi);
    let residual = (u.adjoint() * &u - identity(code.n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if residual > tol::UNITARY {
        return Err(Error::DegenerateCode {
            seed: code.seed,
            rank: code.frame_spectrum.len(),
            requested: code.n,
        });
    }
    Ok(u)
}

/// `U F` maps `|k⟩` to `φ̂ₖ`.
pub fn conjugate_encoder(code: &SubspaceCode) -> Result<CMatrix> {
    Ok(encoder_isometry(code)? * fourier_matrix(code.n)?)
}

/// Largest deviation of `⟨φⱼ|φₖ⟩` from `δⱼₖ`.
pub fn orthonormality_residual(code: &SubspaceCode) -> f64 {
    let u = columns(&code.phi);
    (u.adjoint() * &u - identity(code.n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `max |Σφφ† − Σφ̂φ̂†|`.
pub fn parseval_residual(code: &SubspaceCode) -> f64 {
    (frame_operator(&code.phi).into_matrix() - frame_operator(&code.phi_hat).into_matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `min eig(√Γ − 1.5Γ + 0.5Γ²)`, computed on the spectrum of `Γ`.
pub fn sqrt_trick_slack(code: &SubspaceCode) -> f64 {
    let zero = (code.ambient_dim() > code.n).then_some(0.0);
    code.frame_spectrum
        .iter()
        .copied()
        .chain(zero)
        .map(|x| {
            let x = x.max(0.0);
            x.sqrt() - 1.5 * x + 0.5 * x * x
        })
        .fold(f64::INFINITY, f64::min)
}

/// `√Γ − 1.5Γ + 0.5Γ²` assembled as a matrix, for an eigenvalue check independent of the
/// scalar identity.
pub fn sqrt_trick_operator(code: &SubspaceCode) -> CMatrix {
    let g = code.frame.matrix();
    let sq = operator_function(&code.frame, f64::sqrt).into_matrix();
    sq - g.scale(1.5) + (g * g).scale(0.5)
}

//! Decoding and the information chain: square-root measurements, two-state and
//! packing benchmarks, one-shot bound evaluation, and the reference/output/environment
//! audit of a coded channel state.

use serde::{Deserialize, Serialize};

use crate::channels::{
    channel_apply, complementary_apply, holevo_chi, output_ensemble, Ensemble,
    StinespringIsometry,
};
use crate::codes::{encoder_isometry, SubspaceCode};
use crate::error::{Error, Result};
use crate::qit::{
    binary_entropy, hermitian_eigen, hermitian_eigenvalues, identity, kron, operator_function,
    relative_entropy_nats, support_function, support_projector, trace_distance,
    trace_norm_hermitian, CMatrix, CVector, DensityOperator, Operator, PositiveOperator,
    PureState, SystemSplit, C64,
};
use crate::tol;

/// Measurement with one outcome per message plus an optional junk outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<PositiveOperator>,
    junk: Option<PositiveOperator>,
    completeness_residual: f64,
}

fn completeness(elements: &[PositiveOperator], junk: Option<&PositiveOperator>) -> f64 {
    let d = elements[0].dim();
    let mut sum = elements
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, e| acc + e.matrix());
    if let Some(j) = junk {
        sum += j.matrix();
    }
    (sum - identity(d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Povm {
    /// Validates positivity and `Σ elements (+ junk) = I` within τ_unit.
    pub fn new(elements: Vec<PositiveOperator>, junk: Option<PositiveOperator>) -> Result<Self> {
        let d = elements.first().ok_or(Error::EmptyFamily)?.dim();
        if let Some(e) = elements.iter().chain(junk.as_ref()).find(|e| e.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: e.dim(),
            });
        }
        let residual = completeness(&elements, junk.as_ref());
        if residual > tol::UNITARY {
            return Err(Error::Completeness { residual });
        }
        Ok(Self {
            elements,
            junk,
            completeness_residual: residual,
        })
    }

    pub fn elements(&self) -> &[PositiveOperator] {
        &self.elements
    }

    pub fn junk(&self) -> Option<&PositiveOperator> {
        self.junk.as_ref()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Largest entry of `Σ elements + junk − I`.
    pub fn completeness_residual(&self) -> f64 {
        self.completeness_residual
    }

    /// Merges outcomes `j` and `k` into an ambiguous result counted as junk.
    pub fn coarse_grain(&self, j: usize, k: usize) -> Result<Self> {
        let n = self.len();
        if j >= n || k >= n || j == k {
            return Err(Error::Invalid(format!(
                "cannot merge outcomes {j} and {k} of {n}"
            )));
        }
        let d = self.dim();
        let mut junk = self
            .junk
            .as_ref()
            .map_or_else(|| CMatrix::zeros(d, d), |m| m.matrix().clone());
        junk += self.elements[j].matrix() + self.elements[k].matrix();
        let mut elements = self.elements.clone();
        elements[j] = PositiveOperator::zeros(d);
        elements[k] = PositiveOperator::zeros(d);
        let junk = Some(PositiveOperator::from_psd(junk));
        let residual = completeness(&elements, junk.as_ref());
        Ok(Self {
            elements,
            junk,
            completeness_residual: residual,
        })
    }
}

/// Square-root measurement `Λⱼ = σ̄^{-1/2} pⱼσⱼ σ̄^{-1/2}` on `supp σ̄`, completed by the
/// junk outcome `I − P_supp`.
pub fn pgm_povm(e: &Ensemble) -> Result<Povm> {
    let avg = e.average();
    let eig = hermitian_eigen(avg.matrix());
    if eig.max() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let inv = support_function(&avg, |x| 1.0 / x.sqrt());
    let elements: Vec<PositiveOperator> = e
        .weights()
        .iter()
        .zip(e.members())
        .map(|(&p, s)| {
            PositiveOperator::from_psd(inv.matrix() * s.matrix().scale(p) * inv.matrix())
        })
        .collect();
    let d = e.dim();
    let supp = support_projector(&avg);
    let junk = if eig.rank() < d {
        Some(PositiveOperator::from_psd(identity(d) - supp.matrix()))
    } else {
        None
    };
    let residual = completeness(&elements, junk.as_ref());
    Ok(Povm {
        elements,
        junk,
        completeness_residual: residual,
    })
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    // tr(AB) for Hermitian A, B
    a.zip_fold(b, C64::new(0.0, 0.0), |acc, x, y| acc + x * y.conj())
        .re
}

/// `P_E = (1/N) Σⱼ tr σⱼ(1 − Λⱼ)`, clamped to `[0, max(1, maxⱼ tr σⱼ)]`.
pub fn classical_error(states: &[PositiveOperator], povm: &Povm) -> Result<f64> {
    if states.len() != povm.len() {
        return Err(Error::DimensionMismatch {
            expected: povm.len(),
            found: states.len(),
        });
    }
    if states.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut total = 0.0;
    let mut max_tr: f64 = 0.0;
    for (s, l) in states.iter().zip(povm.elements()) {
        if s.dim() != l.dim() {
            return Err(Error::DimensionMismatch {
                expected: l.dim(),
                found: s.dim(),
            });
        }
        let t = s.trace();
        max_tr = max_tr.max(t);
        total += t - trace_product(s.matrix(), l.matrix());
    }
    Ok((total / states.len() as f64).clamp(0.0, max_tr.max(1.0)))
}

/// PGM error on the ensemble's own members with uniform message weights.
pub fn pgm_error(e: &Ensemble) -> Result<f64> {
    let povm = pgm_povm(e)?;
    classical_error(e.members(), &povm)
}

/// Optimal error `½(1 − ½‖s₀ − s₁‖₁)` for two equiprobable states.
pub fn helstrom_error(s0: &DensityOperator, s1: &DensityOperator) -> Result<f64> {
    Ok(0.5 * (1.0 - 0.5 * trace_distance(s0, s1)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingBound {
    /// `2ε + 4√ε + 4η`
    pub tight: f64,
    /// `6√ε + 4η`
    pub simple: f64,
}

pub fn packing_bound(epsilon: f64, eta: f64) -> Result<PackingBound> {
    if !(epsilon >= 0.0) || !(eta >= 0.0) {
        return Err(Error::OutOfRange {
            what: "packing parameter",
            value: epsilon.min(eta),
            range: ">= 0",
        });
    }
    let s = epsilon.sqrt();
    Ok(PackingBound {
        tight: 2.0 * epsilon + 4.0 * s + 4.0 * eta,
        simple: 6.0 * s + 4.0 * eta,
    })
}

/// Divisor in the exponent of the failure term `3N exp(−Nε²/divisor)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ExponentDivisor {
    Four,
    #[default]
    Six,
}

impl ExponentDivisor {
    pub fn value(self) -> f64 {
        match self {
            ExponentDivisor::Four => 4.0,
            ExponentDivisor::Six => 6.0,
        }
    }
}

impl TryFrom<u8> for ExponentDivisor {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            4 => Ok(ExponentDivisor::Four),
            6 => Ok(ExponentDivisor::Six),
            other => Err(format!("exponent divisor must be 4 or 6, got {other}")),
        }
    }
}

impl From<ExponentDivisor> for u8 {
    fn from(d: ExponentDivisor) -> u8 {
        match d {
            ExponentDivisor::Four => 4,
            ExponentDivisor::Six => 6,
        }
    }
}

/// Parameters of the one-shot coding theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneShotParams {
    pub epsilon: f64,
    pub eta: f64,
    #[serde(rename = "D_param")]
    pub d_param: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    #[serde(rename = "rank_PE")]
    pub rank_pe: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub exponent_divisor: ExponentDivisor,
}

/// `λ = 9√ε + 7√η + 3N exp(−Nε²/divisor)`.
pub fn lambda(epsilon: f64, eta: f64, n: usize, divisor: ExponentDivisor) -> f64 {
    let nf = n as f64;
    9.0 * epsilon.max(0.0).sqrt()
        + 7.0 * eta.max(0.0).sqrt()
        + 3.0 * nf * (-nf * epsilon * epsilon / divisor.value()).exp()
}

impl OneShotParams {
    pub fn new(
        epsilon: f64,
        eta: f64,
        d_param: f64,
        delta: f64,
        rank_pe: usize,
        n: usize,
        exponent_divisor: ExponentDivisor,
    ) -> Self {
        Self {
            epsilon,
            eta,
            d_param,
            delta,
            rank_pe,
            n,
            lambda: lambda(epsilon, eta, n, exponent_divisor),
            exponent_divisor,
        }
    }

    /// `min(η D / rank P^E, η Δ)`.
    pub fn max_code_size(&self) -> f64 {
        (self.eta * self.d_param / self.rank_pe.max(1) as f64).min(self.eta * self.delta)
    }

    /// `0 < ε ≤ 1/3`, `0 < η ≤ 1` and `N ≤ min(η D / rank P^E, η Δ)`.
    pub fn preconditions_hold(&self) -> bool {
        self.epsilon > 0.0
            && self.epsilon <= 1.0 / 3.0
            && self.eta > 0.0
            && self.eta <= 1.0
            && self.n as f64 <= self.max_code_size()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneShotBounds {
    pub lambda: f64,
    /// `log₂N − H₂(2λ) − 2λ log₂N`; absent when `2λ > 1`.
    pub chi_floor: Option<f64>,
    /// `2√(2H₂(2λ) + 4λ log₂N)`; absent when `2λ > 1`.
    pub q_error: Option<f64>,
    /// `7√(log₂N) λ^{1/4}`.
    pub q_error_simplified: f64,
    /// `λ > 1/2` or the error bound is at least 1.
    pub vacuous: bool,
}

pub fn oneshot_bounds(params: &OneShotParams) -> OneShotBounds {
    let lam = params.lambda;
    let log_n = (params.n.max(1) as f64).log2();
    let (chi_floor, q_error) = if (0.0..=0.5).contains(&lam) {
        let h = binary_entropy(2.0 * lam).expect("2λ in [0, 1]");
        (
            Some(log_n - h - 2.0 * lam * log_n),
            Some(2.0 * (2.0 * h + 4.0 * lam * log_n).sqrt()),
        )
    } else {
        (None, None)
    };
    let q_error_simplified = 7.0 * log_n.sqrt() * lam.max(0.0).powf(0.25);
    OneShotBounds {
        lambda: lam,
        chi_floor,
        q_error,
        q_error_simplified,
        vacuous: q_error.is_none_or(|q| q >= 1.0),
    }
}

fn check_projector(p: &PositiveOperator) -> Result<()> {
    let deviation = (p.matrix() * p.matrix() - p.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if deviation > tol::UNITARY.max(1e-9) {
        return Err(Error::NotProjector { deviation });
    }
    Ok(())
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `⟨x|(P ⊗ Q)|x⟩` for `x ∈ B ⊗ E` with `P` on B and `Q` on E.
fn product_projector_weight(x: &CVector, p: &CMatrix, q: &CMatrix) -> f64 {
    let (db, de) = (p.nrows(), q.nrows());
    let m = CMatrix::from_fn(db, de, |b, e| x[b * de + e]);
    let pm = p * &m * q.transpose();
    m.zip_fold(&pm, C64::new(0.0, 0.0), |acc, a, b| acc + a.conj() * b)
        .re
}

/// One-shot conditions measured at a given input state and pair of projectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preconditions {
    /// `1 − tr((Vρ̃V†)(P^B ⊗ P^E))`.
    pub epsilon: f64,
    /// `1 / λ_max(P^B N(ρ̃) P^B)`.
    #[serde(rename = "D_param")]
    pub d_param: f64,
    /// `1 / λ_max(ρ̃)`.
    #[serde(rename = "Delta")]
    pub delta: f64,
    #[serde(rename = "rank_PE")]
    pub rank_pe: usize,
}

impl Preconditions {
    pub fn with_code(&self, eta: f64, n: usize, divisor: ExponentDivisor) -> OneShotParams {
        OneShotParams::new(
            self.epsilon,
            eta,
            self.d_param,
            self.delta,
            self.rank_pe,
            n,
            divisor,
        )
    }
}

pub fn oneshot_preconditions(
    v: &StinespringIsometry,
    rho_tilde: &DensityOperator,
    p_b: &PositiveOperator,
    p_e: &PositiveOperator,
) -> Result<Preconditions> {
    check_dim(v.dim_a(), rho_tilde.dim())?;
    check_dim(v.dim_b(), p_b.dim())?;
    check_dim(v.dim_e(), p_e.dim())?;
    check_projector(p_b)?;
    check_projector(p_e)?;
    let eig = hermitian_eigen(rho_tilde.matrix());
    let mut weight = 0.0;
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam <= 0.0 {
            continue;
        }
        let x = v.matrix() * eig.vectors.column(i);
        weight += lam * product_projector_weight(&x, p_b.matrix(), p_e.matrix());
    }
    let out = channel_apply(v, rho_tilde.matrix());
    let pinched = p_b.matrix() * out * p_b.matrix();
    let max_out = hermitian_eigenvalues(&pinched).last().copied().unwrap_or(0.0);
    Ok(Preconditions {
        epsilon: (1.0 - weight).max(0.0),
        d_param: 1.0 / max_out,
        delta: 1.0 / eig.max(),
        rank_pe: p_e.trace().round() as usize,
    })
}

/// Support of `tr_E |γ′⟩⟨γ′|` for `|γ′⟩ = (1 ⊗ P^E) V|γ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSupport {
    pub projector: PositiveOperator,
    pub rank: usize,
    /// `γ′` vanished; the projector is zero.
    pub zero: bool,
}

pub fn schmidt_support_projector(
    v: &StinespringIsometry,
    p_e: &PositiveOperator,
    gamma: &PureState,
) -> Result<SchmidtSupport> {
    check_dim(v.dim_e(), p_e.dim())?;
    let x = v.apply(gamma.vector())?;
    let (db, de) = (v.dim_b(), v.dim_e());
    let m = CMatrix::from_fn(db, de, |b, e| x[b * de + e]) * p_e.matrix().transpose();
    let reduced = PositiveOperator::from_psd(&m * m.adjoint());
    let eig = hermitian_eigen(reduced.matrix());
    if eig.max() <= tol::SUPPORT * gamma.norm_squared().max(f64::MIN_POSITIVE) {
        return Ok(SchmidtSupport {
            projector: PositiveOperator::zeros(db),
            rank: 0,
            zero: true,
        });
    }
    let projector = support_projector(&reduced);
    Ok(SchmidtSupport {
        rank: eig.rank(),
        projector,
        zero: false,
    })
}

/// `|Ψ⟩ = (1/√N) Σⱼ |j⟩_R ⊗ V|bⱼ⟩` on `R ⊗ B ⊗ E` for an orthonormal family `bⱼ`.
pub fn joint_state_from_basis(basis: &[PureState], v: &StinespringIsometry) -> Result<PureState> {
    let n = basis.len();
    if n == 0 {
        return Err(Error::EmptyFamily);
    }
    let out = v.dim_b() * v.dim_e();
    let mut psi = CVector::zeros(n * out);
    let s = 1.0 / (n as f64).sqrt();
    for (j, b) in basis.iter().enumerate() {
        let y = v.apply(b.vector())?;
        psi.rows_mut(j * out, out).copy_from(&(y * C64::new(s, 0.0)));
    }
    Ok(PureState::from_vector(psi))
}

/// `|Ψ⟩ = (1 ⊗ VU)|Φ_N⟩` for the code's encoder `U`.
pub fn joint_state(code: &SubspaceCode, v: &StinespringIsometry) -> Result<PureState> {
    check_dim(v.dim_a(), code.ambient_dim())?;
    encoder_isometry(code)?;
    joint_state_from_basis(code.phi(), v)
}

/// Information quantities of a coded channel state, in bits unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationAudit {
    pub chi_basis: f64,
    pub chi_conjugate: f64,
    #[serde(rename = "I_RB")]
    pub i_rb: f64,
    #[serde(rename = "I_RE")]
    pub i_re: f64,
    #[serde(rename = "H_R")]
    pub h_r: f64,
    /// `2H(R) − I(R:B) − I(R:E)`.
    pub duality_residual: f64,
    /// `I(R:E)` in nats minus `(½ decoupling_distance)²`.
    pub pinsker_slack: f64,
    /// `I(R:B) − χ_basis − χ_conjugate`.
    pub uncertainty_slack: f64,
    /// `log₂N − P_e log₂N − H₂(P_e)` at the measured PGM error of the basis ensemble.
    pub fano_bound: f64,
    /// `‖Ψ^{RE} − τ^R ⊗ Ψ^E‖₁`.
    pub decoupling_distance: f64,
}

impl InformationAudit {
    /// `χ_basis − fano_bound`.
    pub fn fano_slack(&self) -> f64 {
        self.chi_basis - self.fano_bound
    }
}

fn entropy_of(m: &CMatrix) -> Result<f64> {
    crate::qit::entropy_of_spectrum(&hermitian_eigenvalues(m))
}

fn reduced(psi: &PureState, split: &SystemSplit, keep: &[usize]) -> Result<CMatrix> {
    crate::qit::reduced_from_pure(psi.vector(), split, keep)
}

/// Fano lower bound `log₂N − P_e log₂N − H₂(P_e)`.
pub fn fano_bound(n: usize, p_e: f64) -> Result<f64> {
    let log_n = (n as f64).log2();
    let p = p_e.clamp(0.0, 1.0);
    Ok(log_n - p * log_n - binary_entropy(p)?)
}

/// Reference/environment quantities of a bipartite state `ρ^{RE}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecouplingAudit {
    /// `I(R:E)` in nats.
    pub mutual_information_nats: f64,
    /// `‖ρ^{RE} − τ^R ⊗ ρ^E‖₁`.
    pub decoupling_distance: f64,
    /// `I(R:E) − (½ decoupling_distance)²`.
    pub pinsker_slack: f64,
}

/// Audits a reference/environment state whose reference marginal is maximally mixed.
pub fn decoupling_audit(rho_re: &DensityOperator, dim_r: usize) -> Result<DecouplingAudit> {
    if dim_r == 0 || rho_re.dim() % dim_r != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim_r,
            found: rho_re.dim(),
        });
    }
    let dim_e = rho_re.dim() / dim_r;
    let split = SystemSplit::bipartite(dim_r, dim_e);
    let rho_r = crate::qit::partial_trace_matrix(rho_re.matrix(), &split, &[0])?;
    let rho_e = crate::qit::partial_trace_matrix(rho_re.matrix(), &split, &[1])?;
    let tau = identity(dim_r).unscale(dim_r as f64);
    let product = DensityOperator::new(kron(&tau, &rho_e))?;
    let marginals = DensityOperator::new(kron(&rho_r, &rho_e))?;
    let mi = relative_entropy_nats(rho_re, &marginals)?;
    let dist = trace_distance(rho_re, &product)?;
    Ok(DecouplingAudit {
        mutual_information_nats: mi,
        decoupling_distance: dist,
        pinsker_slack: mi - 0.25 * dist * dist,
    })
}

/// Audits the state `(1/√N) Σⱼ |j⟩ ⊗ V|bⱼ⟩` for an orthonormal basis `bⱼ` and its
/// Fourier-conjugate basis.
pub fn audit_basis(basis: &[PureState], v: &StinespringIsometry) -> Result<InformationAudit> {
    let psi = joint_state_from_basis(basis, v)?;
    let conj = crate::gaussian::fourier_conjugate_family(basis)?;
    audit_state(&psi, basis, &conj, v)
}

/// Audit of a joint state given the bases whose output ensembles enter the Holevo terms.
pub fn information_audit(
    psi: &PureState,
    code: &SubspaceCode,
    v: &StinespringIsometry,
) -> Result<InformationAudit> {
    audit_state(psi, code.phi(), code.phi_hat(), v)
}

fn audit_state(
    psi: &PureState,
    basis: &[PureState],
    conjugate: &[PureState],
    v: &StinespringIsometry,
) -> Result<InformationAudit> {
    let n = basis.len();
    let (db, de) = (v.dim_b(), v.dim_e());
    let split = SystemSplit::new(vec![n, db, de])?;
    split.check(psi.dim())?;
    let r = reduced(psi, &split, &[0])?;
    let b = reduced(psi, &split, &[1])?;
    let e = reduced(psi, &split, &[2])?;
    let rb = reduced(psi, &split, &[0, 1])?;
    let re = reduced(psi, &split, &[0, 2])?;
    let h_r = entropy_of(&r)?;
    let i_rb = h_r + entropy_of(&b)? - entropy_of(&rb)?;
    let i_re = h_r + entropy_of(&e)? - entropy_of(&re)?;

    let tau = identity(n).unscale(n as f64);
    let re_state = DensityOperator::new(re.clone())?;
    let product = DensityOperator::new(kron(&tau, &e))?;
    let decoupling_distance = trace_distance(&re_state, &product)?;
    let i_re_nats = i_re * std::f64::consts::LN_2;

    let basis_ens = output_ensemble(v, basis, true)?;
    let conj_ens = output_ensemble(v, conjugate, true)?;
    let chi_basis = holevo_chi(&basis_ens)?;
    let chi_conjugate = holevo_chi(&conj_ens)?;
    let p_e = pgm_error(&basis_ens)?;

    Ok(InformationAudit {
        chi_basis,
        chi_conjugate,
        i_rb,
        i_re,
        h_r,
        duality_residual: 2.0 * h_r - i_rb - i_re,
        pinsker_slack: i_re_nats - 0.25 * decoupling_distance * decoupling_distance,
        uncertainty_slack: i_rb - chi_basis - chi_conjugate,
        fano_bound: fano_bound(n, p_e)?,
        decoupling_distance,
    })
}

/// PGM errors of the output ensembles `{N(φⱼ)}` and `{N(φ̂ₖ)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputErrors {
    pub basis: f64,
    pub conjugate: f64,
}

pub fn output_decoding_errors(code: &SubspaceCode, v: &StinespringIsometry) -> Result<OutputErrors> {
    Ok(OutputErrors {
        basis: pgm_error(&output_ensemble(v, code.phi(), true)?)?,
        conjugate: pgm_error(&output_ensemble(v, code.phi_hat(), true)?)?,
    })
}

/// Packing conditions evaluated in expectation over the Gaussian ensemble.
///
/// With `Π = P^B` and `Π_g` the Schmidt support of `(1 ⊗ P^E)V|γ⟩`, the averaged
/// conditions follow from `E|γ⟩⟨γ| = ρ̃`: `E tr σ_g Π = tr N(ρ̃)P^B` and
/// `E tr σ_g Π_g ≥ tr N^c(ρ̃)P^E`. `η` is set so that `N = η D / rank P^E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingParams {
    pub epsilon: f64,
    #[serde(rename = "D_param")]
    pub d_param: f64,
    #[serde(rename = "rank_PE")]
    pub rank_pe: usize,
    pub eta: f64,
    pub bound: PackingBound,
}

pub fn packing_parameters(
    v: &StinespringIsometry,
    rho_tilde: &DensityOperator,
    p_b: &PositiveOperator,
    p_e: &PositiveOperator,
    n: usize,
) -> Result<PackingParams> {
    check_dim(v.dim_a(), rho_tilde.dim())?;
    check_dim(v.dim_b(), p_b.dim())?;
    check_dim(v.dim_e(), p_e.dim())?;
    check_projector(p_b)?;
    check_projector(p_e)?;
    let out = channel_apply(v, rho_tilde.matrix());
    let env = complementary_apply(v, rho_tilde.matrix());
    let w_b = trace_product(&out, p_b.matrix());
    let w_e = trace_product(&env, p_e.matrix());
    let epsilon = (1.0 - w_b.min(w_e)).max(0.0);
    let pinched = p_b.matrix() * &out * p_b.matrix();
    let d_param = 1.0 / hermitian_eigenvalues(&pinched).last().copied().unwrap_or(0.0);
    let rank_pe = p_e.trace().round() as usize;
    let eta = n as f64 * rank_pe as f64 / d_param;
    Ok(PackingParams {
        epsilon,
        d_param,
        rank_pe,
        eta,
        bound: packing_bound(epsilon, eta)?,
    })
}

/// PGM error on the unnormalized output ensemble `{1/N, N(γⱼ)}` of a code.
pub fn gamma_pgm_error(code: &SubspaceCode, v: &StinespringIsometry) -> Result<f64> {
    check_dim(v.dim_a(), code.ambient_dim())?;
    pgm_error(&output_ensemble(v, code.gamma(), false)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GentleReport {
    /// `tr ρ(1 − X) / tr ρ`.
    pub epsilon: f64,
    /// `‖ρ − √X ρ √X‖₁`.
    pub disturbance: f64,
    /// `2√ε tr ρ`.
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks `‖ρ − √X ρ √X‖₁ ≤ 2√ε tr ρ` for `0 ⪯ X ⪯ I`.
pub fn gentle_measurement_check(rho: &PositiveOperator, x: &PositiveOperator) -> Result<GentleReport> {
    check_dim(rho.dim(), x.dim())?;
    let ev = hermitian_eigenvalues(x.matrix());
    if let Some(&bad) = ev.iter().find(|&&l| l < -tol::PSD || l > 1.0 + tol::PSD) {
        return Err(Error::OutOfRange {
            what: "eigenvalue of X",
            value: bad,
            range: "[0, 1]",
        });
    }
    let t = rho.trace();
    if t <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let d = rho.dim();
    let epsilon = (trace_product(rho.matrix(), &(identity(d) - x.matrix())) / t).max(0.0);
    let sx = operator_function(x, f64::sqrt);
    let disturbed = sx.matrix() * rho.matrix() * sx.matrix();
    let disturbance = trace_norm_hermitian(&(rho.matrix() - disturbed));
    let bound = 2.0 * epsilon.sqrt() * t;
    Ok(GentleReport {
        epsilon,
        disturbance,
        bound,
        slack: bound - disturbance,
        holds: disturbance <= bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{standard_channel, ChannelFamily};
    use crate::codes::build_random_code;
    use crate::random;
    use crate::rng::stream;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn basis_states(d: usize) -> Vec<DensityOperator> {
        (0..d).map(|i| DensityOperator::pure(&PureState::basis(d, i))).collect()
    }

    #[test]
    fn pgm_on_orthogonal_states_is_perfect() {
        let e = Ensemble::uniform_states(&basis_states(3)).unwrap();
        let povm = pgm_povm(&e).unwrap();
        for (i, l) in povm.elements().iter().enumerate() {
            let p = basis_states(3)[i].matrix().clone();
            assert!(max_abs(&(l.matrix() - p)) < 1e-12);
        }
        assert!(povm.junk().is_none());
        let states: Vec<PositiveOperator> =
            basis_states(3).into_iter().map(|s| s.as_positive()).collect();
        assert!(classical_error(&states, &povm).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pgm_on_identical_states() {
        let mut rng = stream(1, "ident", 0);
        let s = random::random_density(4, 2, &mut rng);
        let n = 3;
        let e = Ensemble::uniform_states(&vec![s.clone(); n]).unwrap();
        let povm = pgm_povm(&e).unwrap();
        let supp = support_projector(&s);
        for l in povm.elements() {
            assert!(max_abs(&(l.matrix() - supp.matrix().unscale(n as f64))) < 1e-9);
        }
        assert!(povm.junk().is_some());
        assert!(povm.completeness_residual() < 1e-9);
        let err = pgm_error(&e).unwrap();
        assert!((err - (1.0 - 1.0 / n as f64)).abs() < 1e-9);
    }

    #[test]
    fn guessing_povm_error() {
        let mut rng = stream(2, "guess", 0);
        let n = 4;
        let d = 3;
        let povm = Povm::new(
            vec![PositiveOperator::identity(d).scaled(1.0 / n as f64); n],
            None,
        )
        .unwrap();
        let states: Vec<PositiveOperator> = (0..n)
            .map(|_| random::random_density(d, d, &mut rng).as_positive())
            .collect();
        let err = classical_error(&states, &povm).unwrap();
        assert!((err - 0.75).abs() < 1e-12);
        assert!(Povm::new(vec![PositiveOperator::identity(d)], Some(PositiveOperator::identity(d))).is_err());
    }

    #[test]
    fn coarse_graining_never_helps() {
        let mut rng = stream(3, "coarse", 0);
        for _ in 0..50 {
            let states: Vec<DensityOperator> =
                (0..4).map(|_| random::random_density(3, 2, &mut rng)).collect();
            let e = Ensemble::uniform_states(&states).unwrap();
            let povm = pgm_povm(&e).unwrap();
            let base = classical_error(e.members(), &povm).unwrap();
            let merged = povm.coarse_grain(0, 2).unwrap();
            assert!(classical_error(e.members(), &merged).unwrap() >= base - 1e-12);
        }
    }

    #[test]
    fn helstrom_cases() {
        let mut rng = stream(4, "hel", 0);
        let s = random::random_density(3, 3, &mut rng);
        assert!((helstrom_error(&s, &s).unwrap() - 0.5).abs() < 1e-12);
        let b = basis_states(2);
        assert!(helstrom_error(&b[0], &b[1]).unwrap().abs() < 1e-12);
        // commuting states: optimal decision picks the larger probability per outcome
        let p = [0.5f64, 0.3, 0.2];
        let q = [0.1, 0.2, 0.7];
        let brute: f64 = p.iter().zip(&q).map(|(a, b)| 0.5 * a.min(*b)).sum();
        let h = helstrom_error(
            &DensityOperator::from_diagonal(&p).unwrap(),
            &DensityOperator::from_diagonal(&q).unwrap(),
        )
        .unwrap();
        assert!((h - brute).abs() < 1e-12);
    }

    #[test]
    fn packing_bound_arithmetic() {
        let b = packing_bound(0.0, 0.0).unwrap();
        assert_eq!((b.tight, b.simple), (0.0, 0.0));
        let b = packing_bound(1e-4, 1e-3).unwrap();
        assert!((b.simple - 0.064).abs() < 1e-15);
        assert!(b.tight <= b.simple);
        assert!(packing_bound(-1.0, 0.0).is_err());
    }

    #[test]
    fn oneshot_examples() {
        let p = OneShotParams {
            lambda: 0.0,
            ..OneShotParams::new(0.0, 0.0, 1.0, 1.0, 1, 4, ExponentDivisor::Six)
        };
        let b = oneshot_bounds(&p);
        assert_eq!(b.chi_floor, Some(2.0));
        assert_eq!(b.q_error, Some(0.0));

        let p = OneShotParams::new(1e-4, 1e-4, 1e9, 1e9, 1, 1_000_000, ExponentDivisor::Six);
        let expect = 9e-2 + 7e-2 + 3e6 * (-1e6f64 * 1e-8 / 6.0).exp();
        assert!((p.lambda - expect).abs() < 1e-6 * expect);
        let b = oneshot_bounds(&p);
        assert!(b.vacuous && b.chi_floor.is_none() && b.q_error.is_none());

        let four = lambda(0.1, 0.01, 1000, ExponentDivisor::Four);
        let six = lambda(0.1, 0.01, 1000, ExponentDivisor::Six);
        assert!(four < six);
    }

    #[test]
    fn oneshot_params_json_names() {
        let p = OneShotParams::new(0.1, 0.2, 8.0, 4.0, 2, 3, ExponentDivisor::Four);
        let v = serde_json::to_value(&p).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["D_param", "Delta", "N", "epsilon", "eta", "exponent_divisor", "lambda", "rank_PE"]
        );
        assert_eq!(v["exponent_divisor"], 4);
        let back: OneShotParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
        let mut bad = serde_json::to_value(&p).unwrap();
        bad["exponent_divisor"] = 5.into();
        assert!(serde_json::from_value::<OneShotParams>(bad).is_err());
    }

    #[test]
    fn preconditions_identity_and_pure() {
        let d = 4;
        let v = standard_channel(ChannelFamily::Identity, d).unwrap();
        let rho = DensityOperator::maximally_mixed(d);
        let pre = oneshot_preconditions(
            &v,
            &rho,
            &PositiveOperator::identity(d),
            &PositiveOperator::identity(1),
        )
        .unwrap();
        assert!(pre.epsilon.abs() < 1e-12);
        assert!((pre.d_param - 4.0).abs() < 1e-9 && (pre.delta - 4.0).abs() < 1e-9);
        assert_eq!(pre.rank_pe, 1);

        let pure = DensityOperator::pure(&PureState::basis(d, 1));
        let pre = oneshot_preconditions(
            &v,
            &pure,
            &PositiveOperator::identity(d),
            &PositiveOperator::identity(1),
        )
        .unwrap();
        assert!((pre.delta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preconditions_weight_matches_dense_route() {
        let mut rng = stream(5, "pre", 0);
        let v = standard_channel(ChannelFamily::Depolarizing { p: 0.3 }, 2).unwrap();
        let rho = random::random_density(2, 2, &mut rng);
        let p_b = DensityOperator::pure(&PureState::basis(2, 0)).as_positive();
        let p_e = PositiveOperator::from_psd(CMatrix::from_diagonal(&CVector::from_fn(4, |i, _| {
            C64::new(if i < 2 { 1.0 } else { 0.0 }, 0.0)
        })));
        let pre = oneshot_preconditions(&v, &rho, &p_b, &p_e).unwrap();
        let omega = v.matrix() * rho.matrix() * v.matrix().adjoint();
        let dense = trace_product(&omega, &kron(p_b.matrix(), p_e.matrix()));
        assert!((pre.epsilon - (1.0 - dense)).abs() < 1e-12);
        assert_eq!(pre.rank_pe, 2);
        assert!(oneshot_preconditions(&v, &rho, &PositiveOperator::identity(2).scaled(0.5), &p_e).is_err());
    }

    #[test]
    fn schmidt_support_ranks() {
        let mut rng = stream(6, "schmidt", 0);
        let v = standard_channel(ChannelFamily::Depolarizing { p: 0.5 }, 3).unwrap();
        for _ in 0..50 {
            let g = random::random_gaussian_vector(3, &mut rng);
            let full = schmidt_support_projector(&v, &PositiveOperator::identity(9), &g).unwrap();
            let big = v.apply(g.vector()).unwrap();
            let m = CMatrix::from_fn(3, 9, |b, e| big[b * 9 + e]);
            let sv = m.singular_values();
            let smax = sv.max();
            let svd_rank = sv.iter().filter(|&&s| s > tol::SUPPORT.sqrt() * smax).count();
            assert_eq!(full.rank, svd_rank);
            let k = 1 + (rand::Rng::random::<u32>(&mut rng) % 3) as usize;
            let p_e = PositiveOperator::from_psd(CMatrix::from_diagonal(&CVector::from_fn(9, |i, _| {
                C64::new(if i < k { 1.0 } else { 0.0 }, 0.0)
            })));
            let s = schmidt_support_projector(&v, &p_e, &g).unwrap();
            assert!(s.rank <= k);
        }
        let id = standard_channel(ChannelFamily::Identity, 2).unwrap();
        let s = schmidt_support_projector(
            &id,
            &PositiveOperator::zeros(1),
            &PureState::basis(2, 0),
        )
        .unwrap();
        assert!(s.zero && s.rank == 0);
    }

    #[test]
    fn identity_channel_joint_state() {
        let rho = DensityOperator::maximally_mixed(8);
        let code = build_random_code(&rho, 4, 3).unwrap();
        let v = standard_channel(ChannelFamily::Identity, 8).unwrap();
        let psi = joint_state(&code, &v).unwrap();
        assert!((psi.norm_squared() - 1.0).abs() < 1e-12);
        let audit = information_audit(&psi, &code, &v).unwrap();
        assert!((audit.h_r - 2.0).abs() < 1e-9);
        assert!(audit.i_re.abs() < 1e-10);
        assert!(audit.decoupling_distance.abs() < 1e-10);
        assert!((audit.i_rb - 4.0).abs() < 1e-9);
        assert!(audit.duality_residual.abs() < 1e-9);
        assert!(audit.uncertainty_slack >= -1e-8);
        assert!(audit.fano_slack() >= -1e-8);
    }

    #[test]
    fn audit_json_field_names() {
        let rho = DensityOperator::maximally_mixed(4);
        let code = build_random_code(&rho, 2, 3).unwrap();
        let v = standard_channel(ChannelFamily::Dephasing { p: 0.2 }, 4).unwrap();
        let audit = information_audit(&joint_state(&code, &v).unwrap(), &code, &v).unwrap();
        let v = serde_json::to_value(&audit).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "H_R",
                "I_RB",
                "I_RE",
                "chi_basis",
                "chi_conjugate",
                "decoupling_distance",
                "duality_residual",
                "fano_bound",
                "pinsker_slack",
                "uncertainty_slack"
            ]
        );
    }

    #[test]
    fn gentle_cases() {
        let mut rng = stream(7, "gentle", 0);
        let rho = random::random_positive(4, &mut rng);
        let r = gentle_measurement_check(&rho, &PositiveOperator::identity(4)).unwrap();
        assert!(r.disturbance.abs() < 1e-10 && r.bound.abs() < 1e-10);
        let low = random::random_psd_of_rank(4, 2, &mut rng);
        let p = support_projector(&low);
        let r = gentle_measurement_check(&low, &p).unwrap();
        assert!(r.disturbance < 1e-9 && r.bound < 1e-4);
        assert!(gentle_measurement_check(&rho, &PositiveOperator::identity(4).scaled(2.0)).is_err());
        for _ in 0..100 {
            let rho = random::random_positive(5, &mut rng);
            let x = random::random_effect(5, &mut rng);
            assert!(gentle_measurement_check(&rho, &x).unwrap().holds);
        }
    }

    #[test]
    fn fano_values() {
        assert!((fano_bound(4, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let f = fano_bound(2, 0.5).unwrap();
        assert!((f - (1.0 - 0.5 - 1.0)).abs() < 1e-15);
    }
}

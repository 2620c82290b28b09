//! Channels as Stinespring isometries `V: A → B ⊗ E`, the standard channel families,
//! outputs to `B` and `E`, and channel-level information quantities.
//!
//! Rows of the isometry are indexed `b · dim_e + e` (B is the first tensor factor).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qit::{
    entropy, hermitian_eigenvalues, identity, kron, CMatrix, CVector, DensityOperator, Operator,
    PositiveOperator, PureState, C64,
};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct StinespringIsometry {
    matrix: CMatrix,
    dim_a: usize,
    dim_b: usize,
    dim_e: usize,
}

/// Standard channel zoo, selectable by name in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelFamily {
    Identity,
    Dephasing { p: f64 },
    Depolarizing { p: f64 },
    AmplitudeDamping { g: f64 },
    Erasure { p: f64 },
}

impl ChannelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelFamily::Identity => "identity",
            ChannelFamily::Dephasing { .. } => "dephasing",
            ChannelFamily::Depolarizing { .. } => "depolarizing",
            ChannelFamily::AmplitudeDamping { .. } => "amplitude_damping",
            ChannelFamily::Erasure { .. } => "erasure",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            ChannelFamily::Identity => None,
            ChannelFamily::Dephasing { p }
            | ChannelFamily::Depolarizing { p }
            | ChannelFamily::Erasure { p } => Some(p),
            ChannelFamily::AmplitudeDamping { g } => Some(g),
        }
    }

    /// Output dimension for input dimension `d`.
    pub fn output_dim(&self, d: usize) -> usize {
        match self {
            ChannelFamily::Erasure { .. } => d + 1,
            _ => d,
        }
    }

    /// Environment dimension of the dilation built by [`standard_channel`].
    pub fn environment_dim(&self, d: usize) -> usize {
        match self {
            ChannelFamily::Identity => 1,
            ChannelFamily::Dephasing { .. } | ChannelFamily::AmplitudeDamping { .. } => 2,
            ChannelFamily::Depolarizing { .. } => d * d,
            ChannelFamily::Erasure { .. } => d + 1,
        }
    }
}

impl StinespringIsometry {
    /// Wraps a `(dim_b · dim_e) × dim_a` matrix after checking `V†V = I`.
    pub fn new(matrix: CMatrix, dim_b: usize, dim_e: usize) -> Result<Self> {
        if dim_b == 0 || dim_e == 0 || matrix.ncols() == 0 {
            return Err(Error::Invalid("isometry dimensions must be positive".into()));
        }
        if matrix.nrows() != dim_b * dim_e {
            return Err(Error::DimensionMismatch {
                expected: dim_b * dim_e,
                found: matrix.nrows(),
            });
        }
        let dim_a = matrix.ncols();
        let residual = isometry_residual(&matrix);
        if residual > tol::UNITARY {
            return Err(Error::NotIsometry { residual });
        }
        Ok(Self {
            matrix,
            dim_a,
            dim_b,
            dim_e,
        })
    }

    /// `V|ψ⟩ = Σᵢ Kᵢ|ψ⟩ ⊗ |i⟩_E`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyFamily)?;
        let (db, da) = first.shape();
        if let Some(k) = kraus.iter().find(|k| k.shape() != (db, da)) {
            return Err(Error::Invalid(format!(
                "Kraus operators must share a shape: {:?} vs {:?}",
                (db, da),
                k.shape()
            )));
        }
        let sum: CMatrix = kraus
            .iter()
            .fold(CMatrix::zeros(da, da), |acc, k| acc + k.adjoint() * k);
        let residual = (sum - identity(da)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if residual > tol::UNITARY {
            return Err(Error::Completeness { residual });
        }
        let de = kraus.len();
        let mut v = CMatrix::zeros(db * de, da);
        for (i, k) in kraus.iter().enumerate() {
            for b in 0..db {
                for a in 0..da {
                    v[(b * de + i, a)] = k[(b, a)];
                }
            }
        }
        Self::new(v, db, de)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    /// Kraus operator `K_e = (1 ⊗ ⟨e|) V`.
    pub fn kraus(&self, e: usize) -> CMatrix {
        CMatrix::from_fn(self.dim_b, self.dim_a, |b, a| {
            self.matrix[(b * self.dim_e + e, a)]
        })
    }

    pub fn kraus_operators(&self) -> Vec<CMatrix> {
        (0..self.dim_e).map(|e| self.kraus(e)).collect()
    }

    /// `V|ψ⟩` on `B ⊗ E`.
    pub fn apply(&self, psi: &CVector) -> Result<CVector> {
        self.check_input(psi.len())?;
        Ok(&self.matrix * psi)
    }

    /// `V^{⊗n}` with output factors reordered to `Bⁿ ⊗ Eⁿ`.
    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "tensor power",
                value: 0.0,
                range: ">= 1",
            });
        }
        let (db, de) = (self.dim_b, self.dim_e);
        let rows = ((db * de) as f64).powi(n as i32) * (self.dim_a as f64).powi(n as i32);
        if rows > DENSE_CAP {
            return Err(Error::Intractable {
                what: "dense tensor-power isometry entries",
                size: rows,
                cap: DENSE_CAP,
            });
        }
        let mut m = self.matrix.clone();
        for _ in 1..n {
            m = kron(&m, &self.matrix);
        }
        let bn = db.pow(n as u32);
        let en = de.pow(n as u32);
        let mut out = CMatrix::zeros(bn * en, m.ncols());
        for row in 0..bn * en {
            // interleaved digits (b₁e₁ … bₙeₙ) → (b₁…bₙ, e₁…eₙ)
            let mut rem = row;
            let mut bi = 0;
            let mut ei = 0;
            let mut bscale = 1;
            let mut escale = 1;
            for _ in 0..n {
                let e = rem % de;
                rem /= de;
                let b = rem % db;
                rem /= db;
                bi += b * bscale;
                ei += e * escale;
                bscale *= db;
                escale *= de;
            }
            out.row_mut(bi * en + ei).copy_from(&m.row(row));
        }
        Self::new(out, bn, en)
    }

    /// `V J` for an isometric embedding `J: A′ → A`.
    pub fn restrict(&self, embedding: &CMatrix) -> Result<Self> {
        self.check_input(embedding.nrows())?;
        let residual = isometry_residual(embedding);
        if residual > tol::UNITARY {
            return Err(Error::NotIsometry { residual });
        }
        Self::new(&self.matrix * embedding, self.dim_b, self.dim_e)
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.dim_a {
            return Err(Error::DimensionMismatch {
                expected: self.dim_a,
                found: dim,
            });
        }
        Ok(())
    }
}

/// Entry cap for dense matrices built from tensor powers.
pub const DENSE_CAP: f64 = (1u64 << 26) as f64;

fn isometry_residual(m: &CMatrix) -> f64 {
    (m.adjoint() * m - identity(m.ncols()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn diag(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            what,
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Clock and shift operators `Z|k⟩ = ω^k|k⟩`, `X|k⟩ = |k+1⟩`.
fn weyl(d: usize, a: usize, b: usize) -> CMatrix {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    CMatrix::from_fn(d, d, |r, c| {
        if r == (c + a) % d {
            omega((b * c) % d)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Compiles a channel family at input dimension `d` into a dilation.
///
/// Dephasing uses `{√(1−p) I, √p Z}` with the generalized clock `Z`; depolarizing
/// `ρ ↦ (1−p)ρ + p I/d` uses the `d²` Weyl operators; erasure uses one isometric
/// Kraus operator plus `d` operators `√p |e⟩⟨i|` onto the flag `|e⟩ = |d⟩`.
pub fn standard_channel(family: ChannelFamily, d: usize) -> Result<StinespringIsometry> {
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "input dimension",
            value: 0.0,
            range: ">= 1",
        });
    }
    let c = |x: f64| C64::new(x, 0.0);
    let kraus: Vec<CMatrix> = match family {
        ChannelFamily::Identity => vec![identity(d)],
        ChannelFamily::Dephasing { p } => {
            check_probability("dephasing probability", p)?;
            vec![
                identity(d).scale((1.0 - p).sqrt()),
                weyl(d, 0, 1).scale(p.sqrt()),
            ]
        }
        ChannelFamily::Depolarizing { p } => {
            check_probability("depolarizing probability", p)?;
            let d2 = (d * d) as f64;
            let mut ks = Vec::with_capacity(d * d);
            for a in 0..d {
                for b in 0..d {
                    let w = if a == 0 && b == 0 {
                        1.0 - p + p / d2
                    } else {
                        p / d2
                    };
                    ks.push(weyl(d, a, b).scale(w.sqrt()));
                }
            }
            ks
        }
        ChannelFamily::AmplitudeDamping { g } => {
            check_probability("damping parameter", g)?;
            if d != 2 {
                return Err(Error::Invalid(format!(
                    "amplitude damping is defined for qubits, got d = {d}"
                )));
            }
            let mut k1 = CMatrix::zeros(2, 2);
            k1[(0, 1)] = c(g.sqrt());
            vec![diag(&[c(1.0), c((1.0 - g).sqrt())]), k1]
        }
        ChannelFamily::Erasure { p } => {
            check_probability("erasure probability", p)?;
            let mut ks = Vec::with_capacity(d + 1);
            ks.push(CMatrix::from_fn(d + 1, d, |r, col| {
                if r == col {
                    c((1.0 - p).sqrt())
                } else {
                    c(0.0)
                }
            }));
            for i in 0..d {
                let mut k = CMatrix::zeros(d + 1, d);
                k[(d, i)] = c(p.sqrt());
                ks.push(k);
            }
            ks
        }
    };
    StinespringIsometry::from_kraus(&kraus)
}

fn check_state(v: &StinespringIsometry, rho: &impl Operator) -> Result<()> {
    v.check_input(rho.dim())
}

/// `Σ_e K_e X K_e†` for any operator `X` on A (no normalization checks).
pub(crate) fn channel_apply(v: &StinespringIsometry, x: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(v.dim_b, v.dim_b);
    for e in 0..v.dim_e {
        let k = v.kraus(e);
        out += &k * x * k.adjoint();
    }
    out
}

/// `[tr(K_e X K_f†)]_{ef}` for any operator `X` on A.
pub(crate) fn complementary_apply(v: &StinespringIsometry, x: &CMatrix) -> CMatrix {
    let ks = v.kraus_operators();
    let ys: Vec<CMatrix> = ks.iter().map(|k| k * x).collect();
    CMatrix::from_fn(v.dim_e, v.dim_e, |e, f| {
        ys[e].zip_fold(&ks[f], C64::new(0.0, 0.0), |acc, y, k| acc + y * k.conj())
    })
}

/// `N(ρ) = tr_E VρV†`.
pub fn channel_output(v: &StinespringIsometry, rho: &DensityOperator) -> Result<DensityOperator> {
    check_state(v, rho)?;
    Ok(DensityOperator::from_state_matrix(channel_apply(v, rho.matrix())))
}

/// Channel output of an unnormalized positive operator.
pub fn channel_output_positive(
    v: &StinespringIsometry,
    op: &PositiveOperator,
) -> Result<PositiveOperator> {
    check_state(v, op)?;
    Ok(PositiveOperator::from_psd(channel_apply(v, op.matrix())))
}

/// Complementary output `tr_B VρV†`.
pub fn environment_output(
    v: &StinespringIsometry,
    rho: &DensityOperator,
) -> Result<DensityOperator> {
    check_state(v, rho)?;
    Ok(DensityOperator::from_state_matrix(complementary_apply(
        v,
        rho.matrix(),
    )))
}

/// `I_c(ρ; N) = H(B) − H(E)` in bits.
pub fn coherent_information_channel(rho: &DensityOperator, v: &StinespringIsometry) -> Result<f64> {
    Ok(entropy(&channel_output(v, rho)?) - entropy(&environment_output(v, rho)?))
}

/// Weighted family of positive operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    weights: Vec<f64>,
    members: Vec<PositiveOperator>,
}

impl Ensemble {
    /// Requires nonnegative weights summing to 1 and `Σ pₓ tr σₓ = 1`, both within τ_tr.
    pub fn new(weights: Vec<f64>, members: Vec<PositiveOperator>) -> Result<Self> {
        let e = Self::unnormalized(weights, members)?;
        let s: f64 = e.weights.iter().sum();
        if (s - 1.0).abs() > tol::TRACE {
            return Err(Error::NotNormalized { trace: s });
        }
        let t = e.average().trace();
        if (t - 1.0).abs() > tol::TRACE {
            return Err(Error::NotNormalized { trace: t });
        }
        Ok(e)
    }

    /// Uniform weights over normalized states.
    pub fn uniform_states(states: &[DensityOperator]) -> Result<Self> {
        let n = states.len();
        Self::new(
            vec![1.0 / n.max(1) as f64; n],
            states.iter().map(|s| s.as_positive()).collect(),
        )
    }

    /// Skips the normalization checks; used for packing audits on raw Gaussian outputs.
    pub fn unnormalized(weights: Vec<f64>, members: Vec<PositiveOperator>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                found: weights.len(),
            });
        }
        let d = first.dim();
        if let Some(m) = members.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dim(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::OutOfRange {
                what: "ensemble weight",
                value: w,
                range: ">= 0",
            });
        }
        Ok(Self { weights, members })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> &[PositiveOperator] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    /// `σ̄ = Σₓ pₓ σₓ`.
    pub fn average(&self) -> PositiveOperator {
        let d = self.dim();
        let m = self
            .weights
            .iter()
            .zip(&self.members)
            .fold(CMatrix::zeros(d, d), |acc, (&p, s)| {
                acc + s.matrix().scale(p)
            });
        PositiveOperator::from_psd(m)
    }
}

/// `χ = H(Σ pₓσₓ) − Σ pₓ H(σₓ)` in bits.
///
/// The average must be a state. A member whose trace is off by more than τ_tr is
/// renormalized inside its own entropy term.
pub fn holevo_chi(e: &Ensemble) -> Result<f64> {
    let avg = DensityOperator::new(e.average().into_matrix())?;
    let mut chi = entropy(&avg);
    for (&p, s) in e.weights.iter().zip(&e.members) {
        if p == 0.0 {
            continue;
        }
        let t = s.trace();
        let spectrum: Vec<f64> = if (t - 1.0).abs() > tol::TRACE {
            if t <= 0.0 {
                continue;
            }
            hermitian_eigenvalues(s.matrix()).iter().map(|x| x / t).collect()
        } else {
            hermitian_eigenvalues(s.matrix())
        };
        chi -= p * crate::qit::entropy_of_spectrum(&spectrum)?;
    }
    Ok(chi)
}

/// Output ensemble `{pⱼ, N(ψⱼ)}` of pure inputs, normalized if requested.
pub fn output_ensemble(
    v: &StinespringIsometry,
    inputs: &[PureState],
    normalize: bool,
) -> Result<Ensemble> {
    let n = inputs.len();
    let members = inputs
        .iter()
        .map(|psi| {
            v.check_input(psi.dim())?;
            let x = if normalize {
                DensityOperator::pure(psi).into_matrix()
            } else {
                psi.projector().into_matrix()
            };
            Ok(PositiveOperator::from_psd(channel_apply(v, &x)))
        })
        .collect::<Result<Vec<_>>>()?;
    let w = vec![1.0 / n.max(1) as f64; n];
    if normalize {
        Ensemble::new(w, members)
    } else {
        Ensemble::unnormalized(w, members)
    }
}

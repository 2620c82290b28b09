use std::f64::consts::PI;

use nalgebra::SymmetricEigen;

use super::types::{
    symmetrize, CMatrix, CVector, DensityOperator, Operator, PositiveOperator, PureState,
    SystemSplit, C64,
};
use crate::error::{Error, Result};
use crate::tol;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Reassembles `Σ f(λᵢ)|vᵢ⟩⟨vᵢ|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        if let Some(perm) = self.permutation() {
            let mut out = CMatrix::zeros(n, n);
            for (j, &lam) in self.values.iter().enumerate() {
                out[(perm[j], perm[j])] = C64::new(f(lam), 0.0);
            }
            return out;
        }
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Row of the single unit entry of each eigenvector, when the eigenvectors are standard
    /// basis vectors.
    fn permutation(&self) -> Option<Vec<usize>> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        (0..self.vectors.ncols())
            .map(|c| {
                let col = self.vectors.column(c);
                let pos = col.iter().position(|&z| z == one)?;
                col.iter()
                    .enumerate()
                    .all(|(i, &z)| i == pos || z == zero)
                    .then_some(pos)
            })
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Eigenvalues treated as nonzero under the relative support cutoff.
    pub fn support_cutoff(&self) -> f64 {
        tol::SUPPORT * self.max().max(0.0)
    }

    pub fn rank(&self) -> usize {
        let cut = self.support_cutoff();
        self.values.iter().filter(|&&v| v > cut && v > 0.0).count()
    }
}

/// Real diagonal of `m` when every off-diagonal entry is exactly zero.
fn exact_diagonal(m: &CMatrix) -> Option<Vec<f64>> {
    let n = m.nrows();
    for c in 0..n {
        for r in 0..n {
            if r != c && m[(r, c)] != C64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    Some((0..n).map(|i| m[(i, i)].re).collect())
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    if let Some(diag) = exact_diagonal(m) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
        let values = order.iter().map(|&i| diag[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| {
            if r == order[c] {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        return HermitianEigen { values, vectors };
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    if let Some(mut diag) = exact_diagonal(m) {
        diag.sort_by(f64::total_cmp);
        return diag;
    }
    let mut v: Vec<f64> = symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

pub(crate) fn hermiticity_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// `|a⟩⟨b|`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_product(a: &impl Operator, b: &impl Operator) -> PositiveOperator {
    PositiveOperator::from_psd(kron(a.matrix(), b.matrix()))
}

/// Index tables mapping (kept index, traced index) to the full index.
/// Subsystems are ordered big-endian: the first factor is most significant.
struct SplitIndex {
    kept_dim: usize,
    traced_dim: usize,
    table: Vec<usize>,
}

impl SplitIndex {
    fn new(split: &SystemSplit, keep: &[usize]) -> Result<Self> {
        let dims = split.dims();
        let mut kept = vec![false; dims.len()];
        for &k in keep {
            if k >= dims.len() {
                return Err(Error::Invalid(format!(
                    "subsystem index {k} out of range for {} factors",
                    dims.len()
                )));
            }
            kept[k] = true;
        }
        let kept_dim: usize = dims
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(d, _)| d)
            .product();
        let traced_dim = split.total() / kept_dim;
        let total = split.total();
        let mut table = vec![0usize; total];
        let mut digits = vec![0usize; dims.len()];
        for full in 0..total {
            let mut rem = full;
            for s in (0..dims.len()).rev() {
                digits[s] = rem % dims[s];
                rem /= dims[s];
            }
            let (mut ki, mut ti) = (0usize, 0usize);
            for s in 0..dims.len() {
                if kept[s] {
                    ki = ki * dims[s] + digits[s];
                } else {
                    ti = ti * dims[s] + digits[s];
                }
            }
            table[ki * traced_dim + ti] = full;
        }
        Ok(Self {
            kept_dim,
            traced_dim,
            table,
        })
    }

    #[inline]
    fn full(&self, kept: usize, traced: usize) -> usize {
        self.table[kept * self.traced_dim + traced]
    }
}

/// Reduction of a square matrix onto the subsystems listed in `keep`.
pub fn partial_trace_matrix(m: &CMatrix, split: &SystemSplit, keep: &[usize]) -> Result<CMatrix> {
    split.check(m.nrows())?;
    let idx = SplitIndex::new(split, keep)?;
    let k = idx.kept_dim;
    let mut out = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..idx.traced_dim {
                acc += m[(idx.full(i, t), idx.full(j, t))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

pub fn partial_trace(
    op: &impl Operator,
    split: &SystemSplit,
    keep: &[usize],
) -> Result<PositiveOperator> {
    Ok(PositiveOperator::from_psd(partial_trace_matrix(
        op.matrix(),
        split,
        keep,
    )?))
}

/// Reduced operator `tr_{not keep} |ψ⟩⟨ψ|` computed from the amplitude matrix, without
/// forming the full outer product. The vector is used as given (no normalization).
pub fn reduced_from_pure(psi: &CVector, split: &SystemSplit, keep: &[usize]) -> Result<CMatrix> {
    split.check(psi.len())?;
    let idx = SplitIndex::new(split, keep)?;
    let amps = CMatrix::from_fn(idx.kept_dim, idx.traced_dim, |k, t| psi[idx.full(k, t)]);
    Ok(&amps * amps.adjoint())
}

/// Applies `f` to every eigenvalue of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    hermitian_eigen(m).map(f)
}

/// Functional calculus on a positive operator; eigenvalues in `[-τ_psd, 0)` are clamped to 0.
/// `f` must be nonnegative on `[0, ∞)`.
pub fn operator_function(op: &impl Operator, f: impl Fn(f64) -> f64) -> PositiveOperator {
    PositiveOperator::from_psd(hermitian_function(op.matrix(), |x| f(x.max(0.0))))
}

/// Applies `f` on the support (eigenvalues above the relative cutoff) and 0 elsewhere.
/// With `f = x^{-1/2}` this is the pseudo-inverse square root.
pub fn support_function(op: &impl Operator, f: impl Fn(f64) -> f64) -> PositiveOperator {
    let eig = hermitian_eigen(op.matrix());
    let cut = eig.support_cutoff();
    PositiveOperator::from_psd(eig.map(|x| if x > cut && x > 0.0 { f(x) } else { 0.0 }))
}

pub fn support_projector(op: &impl Operator) -> PositiveOperator {
    support_function(op, |_| 1.0)
}

/// `(1/√n) Σⱼ |jj⟩`.
pub fn maximally_entangled(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "dimension",
            value: 0.0,
            range: ">= 1",
        });
    }
    let mut v = CVector::zeros(n * n);
    let amp = 1.0 / (n as f64).sqrt();
    for j in 0..n {
        v[j * n + j] = C64::new(amp, 0.0);
    }
    Ok(PureState::from_vector(v))
}

/// Canonical purification `Σᵢ √λᵢ |i⟩_ref |vᵢ⟩_sys` on reference ⊗ system.
pub fn purify(rho: &DensityOperator) -> PureState {
    let d = rho.dim();
    let eig = hermitian_eigen(rho.matrix());
    let mut v = CVector::zeros(d * d);
    for i in 0..d {
        let w = eig.values[i].max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for s in 0..d {
            v[i * d + s] = eig.vectors[(s, i)] * w;
        }
    }
    PureState::from_vector(v)
}

/// `F_{kj} = e^{2πi jk/n} / √n`, indices from zero.
pub fn fourier_matrix(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "dimension",
            value: 0.0,
            range: ">= 1",
        });
    }
    let s = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_fn(n, n, |k, j| {
        let phase = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(s, phase)
    }))
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::linalg::{hermitian_eigenvalues, hermiticity_deviation, outer};
use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Anything backed by a square Hermitian matrix.
pub trait Operator {
    fn matrix(&self) -> &CMatrix;

    fn dim(&self) -> usize {
        self.matrix().nrows()
    }

    fn trace(&self) -> f64 {
        self.matrix().trace().re
    }
}

/// Hermitian positive semidefinite matrix with unconstrained trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveOperator {
    matrix: CMatrix,
}

impl PositiveOperator {
    /// Validates Hermiticity and positivity, then stores the exactly symmetrized matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let dev = hermiticity_deviation(&matrix);
        if dev > tol::HERM {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let matrix = symmetrize(&matrix);
        let min = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if matrix.nrows() > 0 && min < -tol::PSD {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self { matrix })
    }

    /// Skips the eigenvalue check; for results of operations that preserve positivity.
    pub(crate) fn from_psd(matrix: CMatrix) -> Self {
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Normalizes to unit trace.
    pub fn normalized(&self) -> Result<DensityOperator> {
        let t = self.trace();
        if !(t > 0.0) {
            return Err(Error::NotNormalized { trace: t });
        }
        Ok(DensityOperator {
            matrix: self.matrix.unscale(t),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        debug_assert!(factor >= 0.0);
        Self {
            matrix: self.matrix.scale(factor),
        }
    }
}

impl Operator for PositiveOperator {
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let op = PositiveOperator::new(matrix)?;
        let t = op.trace();
        if (t - 1.0).abs() > tol::TRACE {
            return Err(Error::NotNormalized { trace: t });
        }
        Ok(Self { matrix: op.matrix })
    }

    pub(crate) fn from_state_matrix(matrix: CMatrix) -> Self {
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        let d = DVector::from_iterator(
            probabilities.len(),
            probabilities.iter().map(|&p| C64::new(p, 0.0)),
        );
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn pure(state: &PureState) -> Self {
        let v = state.normalized_vector();
        Self {
            matrix: outer(&v, &v),
        }
    }

    pub fn as_positive(&self) -> PositiveOperator {
        PositiveOperator {
            matrix: self.matrix.clone(),
        }
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

impl Operator for DensityOperator {
    fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

impl From<DensityOperator> for PositiveOperator {
    fn from(rho: DensityOperator) -> Self {
        PositiveOperator { matrix: rho.matrix }
    }
}

/// A vector with finite positive norm. Not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    vector: CVector,
}

impl PureState {
    pub fn new(vector: CVector) -> Result<Self> {
        let n = vector.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(Self { vector })
    }

    pub(crate) fn from_vector(vector: CVector) -> Self {
        Self { vector }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self { vector: v }
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn into_vector(self) -> CVector {
        self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm_squared(&self) -> f64 {
        self.vector.norm_squared()
    }

    pub fn normalized_vector(&self) -> CVector {
        self.vector.unscale(self.vector.norm())
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.vector.dotc(&other.vector)
    }

    /// Rank-one operator `|v⟩⟨v|` without normalization.
    pub fn projector(&self) -> PositiveOperator {
        PositiveOperator::from_psd(outer(&self.vector, &self.vector))
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            vector: self.vector.kronecker(&other.vector),
        }
    }
}

/// Ordered subsystem dimensions of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSplit {
    dims: Vec<usize>,
}

impl SystemSplit {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Invalid("subsystem dimension 0".into()));
        }
        Ok(Self { dims })
    }

    pub fn bipartite(a: usize, b: usize) -> Self {
        Self::new(vec![a, b]).expect("positive dims")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.total(),
                found: dim,
            });
        }
        Ok(())
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

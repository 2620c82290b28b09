//! Dense complex linear algebra and entropic quantities.
//!
//! All entropies are in bits unless the function name says otherwise.

mod entropy;
mod linalg;
mod types;

pub use entropy::{
    binary_entropy, coherent_information_state, entropy, entropy_of_spectrum,
    mutual_information, relative_entropy, relative_entropy_nats, trace_distance,
    trace_norm_hermitian,
};
pub use linalg::{
    dagger, fourier_matrix, hermitian_eigen, hermitian_eigenvalues, hermitian_function,
    identity, kron, maximally_entangled, operator_function, outer, partial_trace,
    partial_trace_matrix, purify, reduced_from_pure, support_function, support_projector,
    tensor_product, HermitianEigen,
};
pub use types::{
    CMatrix, CVector, DensityOperator, Operator, PositiveOperator, PureState, SystemSplit, C64,
};

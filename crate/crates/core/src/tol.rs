//! Numerical tolerances shared by every module.

/// Maximum entrywise deviation from Hermiticity.
pub const HERM: f64 = 1e-9;
/// Maximum deviation of a state's trace from one.
pub const TRACE: f64 = 1e-9;
/// Eigenvalues in `[-PSD, 0)` are clamped to zero; anything lower is an error.
pub const PSD: f64 = 1e-10;
/// Eigenvalues below `SUPPORT * max_eigenvalue` are treated as outside the support.
pub const SUPPORT: f64 = 1e-10;
/// Residual allowed in `V†V = I` and similar unitarity checks.
pub const UNITARY: f64 = 1e-10;
/// Boundary slack for typical-sequence membership.
pub const TYPICAL_EDGE: f64 = 1e-12;

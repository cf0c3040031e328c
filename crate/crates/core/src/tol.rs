//! Central numeric tolerances.
//!
//! Exact statements in the underlying theory (eigenvalue equality, vanishing
//! probe blocks, commutation) become thresholded comparisons in floating
//! point. Every threshold used across the crate lives here so the scaling
//! conventions stay in one place.

/// Relative Hermitian symmetry required of inputs:
/// `‖a − a†‖_F ≤ HERMITIAN_INPUT · max(1, ‖a‖_F)`.
pub const HERMITIAN_INPUT: f64 = 1e-8;

/// Eigenvalue clustering factor. The working tolerance is
/// `τ_eig = EIG_CLUSTER_FACTOR · max(1, ‖A‖₂) · n`.
pub const EIG_CLUSTER_FACTOR: f64 = 1e-8;

/// Relative probe-block coupling threshold `τ_blk`: a block `V_j†·Ā·V_j'`
/// with Frobenius norm above `BLOCK_COUPLING · ‖Ā‖_F` joins two clusters.
pub const BLOCK_COUPLING: f64 = 1e-8;

/// Null-space singular value cutoff factor:
/// `τ_null = NULLSPACE_FACTOR · max(rows, cols) · σ_max`.
pub const NULLSPACE_FACTOR: f64 = 1e-10;

/// Residual gate for an accepted decomposition (relative, per generator).
pub const VERIFY_RESIDUAL: f64 = 1e-8;

/// Agreement required between row norms of a local unitary after
/// normalization; larger spread flags a non-generic probe.
pub const ROW_NORM_AGREEMENT: f64 = 1e-6;

/// Dependence threshold for span membership after projecting a unit-norm
/// candidate onto an orthonormal basis.
pub const SPAN_RESIDUAL: f64 = 1e-8;

/// Near-zero drop threshold in `hermitianize`: `‖·‖_F ≤ ZERO_DROP · n`.
pub const ZERO_DROP: f64 = 1e-12;

/// Kraus-sum deviation `‖Σ A_k†A_k − I‖_F ≤ KRAUS_FLAG · n` for the
/// trace-preserving / unital channel flags.
pub const KRAUS_FLAG: f64 = 1e-8;

/// Density matrix validation: Hermiticity, unit trace, and eigenvalue floor.
pub const DENSITY: f64 = 1e-10;

/// Minimum trace weight a state must have on a component to be decodable.
pub const DECODE_SUPPORT: f64 = 1e-6;

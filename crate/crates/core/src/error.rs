use thiserror::Error;

/// Errors surfaced by the decomposition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input fails the Hermitian symmetry check beyond the stated tolerance.
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    /// A LAPACK routine reported failure (non-convergence or illegal argument).
    #[error("linear algebra backend failed: {0}")]
    NumericalFailure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Algebra closure kept finding new directions past the round budget.
    #[error("closure did not stabilize after {rounds} rounds (dimension reached {dim})")]
    NoConvergence { rounds: usize, dim: usize },

    /// An eigenvalue gap is too close to the clustering tolerance to split safely.
    #[error("ambiguous eigenvalue clustering: gap {gap:.3e} within a decade of tolerance {tolerance:.3e}")]
    AmbiguousClustering { gap: f64, tolerance: f64 },

    /// The probe element failed to connect all clusters of a component, or a
    /// probe block was not scalar-times-unitary. Both indicate a non-generic
    /// draw; the caller redraws and retries.
    #[error("block graph of component {component} is disconnected or non-generic ({detail})")]
    DisconnectedBlockGraph { component: usize, detail: String },

    /// Every retry produced a decomposition whose residual exceeds the gate.
    #[error("decomposition unverified after {attempts} attempts (best residual {residual:.3e})")]
    DecompositionUnverified { attempts: u32, residual: f64 },

    #[error("dimension {dim} exceeds the supported cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    /// The selected component has a trivial identity factor, so it encodes nothing.
    #[error("component {index} carries no useful protected subspace (identity factor is 1-dimensional)")]
    NoUsefulDfs { index: usize },

    /// Decoding was asked of a state with almost no weight on the component.
    #[error("state has negligible support {support:.3e} on component {index}")]
    NegligibleSupport { index: usize, support: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::NumericalFailure(e.to_string())
    }
}

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gram matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("operator is not gram-antisymmetric (residual {residual:.3e})")]
    NotAntisymmetric { residual: f64 },
    #[error("numerical rank {rank} of the Pauli-Jordan operator is odd")]
    OddRank { rank: usize },
    #[error("all singular values are below the rank tolerance")]
    DegenerateInput,
    #[error("Pauli-Jordan operator is singular (smallest singular value {smallest:.3e})")]
    SingularE { smallest: f64 },
    #[error("symplectic form is singular")]
    SingularOmega,
    #[error("invalid mode scale {0}: scales must be finite and positive")]
    InvalidTheta(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("causal relation contains a cycle through element {0}")]
    CycleDetected(usize),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("symbol degree {degree} exceeds the Fock cutoff {cutoff}")]
    DegreeTooHigh { degree: usize, cutoff: usize },
    #[error("operator is not a ladder polynomial of degree <= {degree} (residual {residual:.3e})")]
    NotPolynomial { degree: usize, residual: f64 },
    #[error("Fock truncation too small: estimated tail {tail:.3e} exceeds {tol:.1e}")]
    TruncationTooSmall { tail: f64, tol: f64 },
    #[error("no closed form available: {0}")]
    NoClosedForm(String),
    #[error("symbols live on different mode counts ({0} vs {1})")]
    ModeMismatch(usize, usize),
    #[error("section is not dequantization expandable: {0}")]
    NotExpandable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

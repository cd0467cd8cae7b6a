use thiserror::Error;

/// Errors raised by the operator, divergence, estimation and sampling layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("negative eigenvalue {value:e} below tolerance bound {bound:e}")]
    NegativeEigenvalue { value: f64, bound: f64 },

    #[error("spectral function is undefined at eigenvalue {eigenvalue:e}; restrict it to the support")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("expected object number must be non-negative, got {0}")]
    NegativeN(f64),

    #[error("trace must be 1 for a density operator, got {0}")]
    NotUnitTrace(f64),

    #[error("invalid rare-state specification: {0}")]
    InvalidRareState(String),

    #[error("tail bound must lie in (0, 1), got {0}")]
    InvalidTailBound(f64),

    #[error("parameter s = {0} outside its allowed range")]
    SOutOfRange(f64),

    #[error("intensity values must be finite and non-negative, got {0}")]
    NegativeIntensity(f64),

    #[error("derivative has weight {weight:e} outside the support of the intensity operator")]
    DerivativeOutsideSupport { weight: f64 },

    #[error("Lyapunov equation has no unique solution (residual {residual:e} on a singular mode)")]
    SingularLyapunov { residual: f64 },

    #[error("regularization must be positive, got {0}")]
    InvalidRegularization(f64),

    #[error("outcome {index} has zero intensity but non-zero derivative")]
    ZeroIntensityWithDerivative { index: usize },

    #[error("parameter index {index} out of range for a {q}-parameter family")]
    ParameterIndex { index: usize, q: usize },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("rarity condition violated: per-mode emission probability {probability:e} exceeds {bound:e}")]
    RarityViolated { probability: f64, bound: f64 },

    #[error("mode counts differ: {0} vs {1}")]
    ModeCountMismatch(u64, u64),

    #[error("support of the first intensity is not contained in the second")]
    SupportViolation,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("unsupported qubit count {0}")]
    BadQubitCount(usize),

    #[error("state vector limited to {max} qubits, got {got}")]
    TooManyQubits { got: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid Pauli label {0:?}")]
    InvalidLabel(String),

    #[error("Lie closure exceeded cap {cap} (reached dimension {dim})")]
    ClosureCapExceeded { dim: usize, cap: usize },

    #[error("involution split violates Cartan commutation relations: {0}")]
    InvolutionViolation(String),

    #[error("seed operator has no string in the m subspace")]
    SeedNotInM,

    #[error("operator term {0} lies outside the m subspace")]
    NotInM(String),

    #[error("Cartan optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },

    #[error("Cartan residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("generators in group {0} do not mutually commute")]
    NonCommutingGroup(usize),

    #[error("parameter count mismatch: circuit has {expected}, got {got}")]
    ParameterMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation record missing for sites ({0}, {1})")]
    IncompleteCorrelations(usize, usize),
}

impl Error {
    /// True for failures of the numerical procedures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::ResidualTooLarge { .. } | Error::ClosureCapExceeded { .. }
        )
    }
}

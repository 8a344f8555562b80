use thiserror::Error;

/// Errors raised by the analysis kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("coordinate x{index} out of range for S^{n} (ambient dimension {})", n + 1)]
    CoordinateOutOfRange { index: usize, n: usize },

    #[error("unsupported dimension n = {n}: {reason}")]
    UnsupportedDimension { n: usize, reason: String },

    #[error("candidate is not positive on the sphere: K = {value:e} at {point:?}")]
    NonPositive { value: f64, point: Vec<f64> },

    #[error("expression evaluation failed at {point:?}: {msg}")]
    Evaluation { point: Vec<f64>, msg: String },

    #[error("degenerate critical point at {point:?}: {reason}")]
    Degenerate { point: Vec<f64>, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("subset enumeration cap exceeded: |C-| = {size} > {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("zero denominator: test function vanishes identically")]
    ZeroDenominator,

    #[error("chain complex violation: {0}")]
    Complex(String),

    #[error("integration failed at t = {t}: {msg}")]
    Integration { t: f64, msg: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<Error> },

    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A slate or weight index outside the item universe, or a malformed slate.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Polynomial of the wrong degree for the requested operation.
    #[error("expected a polynomial of degree {expected}, got degree {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("zero polynomial")]
    ZeroPolynomial,

    /// Deflation requested at a value that is not a root.
    #[error("value {value} is not a root (residual {residual:e})")]
    NotARoot { value: f64, residual: f64 },

    /// The rational substitution for the partner weight has a vanishing
    /// denominator; the caller must switch to the pinned branch.
    #[error("degenerate branch: denominator {0:e} below guard")]
    DegenerateBranch(f64),

    /// Input data for which no well-defined answer exists.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An oracle table is missing a slate required by the caller.
    #[error("oracle is missing slate {0}")]
    MissingSlate(String),

    /// The oracle admits no admissible solution.
    #[error("inconsistent oracle: {0}")]
    InconsistentOracle(String),

    /// An iterative search ended without meeting its target.
    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A derivative/expansion order above the supported cap was requested.
    #[error("order cap exceeded: {0}")]
    CapExceeded(String),

    /// An iterative inversion (Newton, fixed point) failed to converge.
    #[error("inverse solve failed: {0}")]
    InverseFailure(String),

    /// An operation was requested outside the hypotheses that make it
    /// well defined (e.g. interior-ordering maps on a linearization whose
    /// symmetry check fails).
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    /// Grid resolution is insufficient for the requested computation.
    #[error("resolution inadequate: {0}")]
    Resolution(String),

    /// Operands live on incompatible grids or have inconsistent shapes.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Bad run configuration (unknown model name, invalid parameter, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Malformed on-disk data.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Any other numeric failure (singular matrix, NaN, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format(_) | Error::Io(_) => 3,
            _ => 2,
        }
    }
}

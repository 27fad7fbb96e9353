use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes or grids do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested system or density lies outside what the routine handles.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A structure matrix failed its skewsymmetry check, or a certificate
    /// does not reproduce its generator.
    #[error("structure error: {0}")]
    Structure(String),

    #[error("instability: non-finite value at step {step} (t = {time})")]
    Instability { step: usize, time: f64 },

    #[error("overflow: exponent {exponent} exceeds the rescaling guard of {limit}")]
    Overflow { exponent: f64, limit: f64 },

    /// Position-dependent switching rates leave an explicit time dependence
    /// after the exponential rescaling.
    #[error("not rescalable: {0}")]
    NotRescalable(String),

    /// A model violates its defining constraint (row sums, mass balance).
    #[error("model error: {0}")]
    Model(String),

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature on [{a}, {b}] did not converge after {levels} halvings (last difference {difference:e})")]
    NonConvergence {
        a: f64,
        b: f64,
        levels: u32,
        difference: f64,
    },

    #[error("t = {t} lies outside the domain [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },

    #[error("kernel is not regular admissible: {0}")]
    UnsupportedKernelClass(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

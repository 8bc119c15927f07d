use thiserror::Error;

/// Errors produced by the spectral pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no periodic orbit: period {period} does not exceed the minimal period {l_min}")]
    NoPeriodicOrbit { period: f64, l_min: f64 },

    #[error("period function bracket not found for target period {target}")]
    BracketFailure { target: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("grid too short: support [{lo}, {hi}] is not contained in [{start}, {end}]")]
    GridTooShort { lo: f64, hi: f64, start: f64, end: f64 },

    #[error("convergence failure after {iterations} iterations: {detail}")]
    ConvergenceFailure { iterations: usize, detail: String },

    #[error("weight overflow: |c|*h_z = {0} >= 2")]
    WeightOverflow(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular shift {re}{im:+}i: factorization failed after perturbation retries")]
    SingularShift { re: f64, im: f64 },

    #[error("not hyperbolic: alpha = {alpha} <= 0")]
    NotHyperbolic { alpha: f64 },

    #[error("lambda0 with real part {re_lambda} is not right of the essential spectrum (sup Re = {sup_re})")]
    NotRightOfEssential { re_lambda: f64, sup_re: f64 },

    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("momentum must be non-zero")]
    ZeroMomentum,

    #[error("position {x} Å lies outside the structure [0, {length}] Å")]
    PositionOutOfRange { x: f64, length: f64 },

    #[error("energy must be positive, got {0} eV")]
    NonPositiveEnergy(f64),

    #[error("pole search did not converge after {iterations} iterations (last |dk| = {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("argument-principle count {winding} disagrees with {found} converged poles")]
    WindingMismatch { winding: i64, found: usize },

    #[error("outgoing boundary residual {residual:e} exceeds tolerance; k = {re_k} {im_k:+}i is not a pole")]
    NotAPole { residual: f64, re_k: f64, im_k: f64 },

    #[error("floating-point overflow evaluating {0}; use the scaled representation")]
    Overflow(&'static str),

    #[error("argument outside the validity sector of the asymptotic expansion: arg(y) = {0}")]
    OutsideSector(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("x = {0} Å sits at a node of phi; normalizing by it is meaningless")]
    NodePosition(f64),

    #[error("fit is not linear over the window (rms residual {0:e})")]
    NonLinearFit(f64),

    #[error("not enough samples: {0}")]
    InsufficientData(String),

    #[error("no exponential-to-non-exponential onset within the sampled range")]
    NoOnset,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

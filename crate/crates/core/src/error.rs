use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("expected {expected} samples, got {got}")]
    Length { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The nonlinear evolution left the admissible range.
    #[error("blow-up at t = {time}: sup|phi| = {sup}")]
    BlowUp { time: f64, sup: f64 },

    #[error("multi-index degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("shift {0} is not a multiple of the lattice spacing")]
    NonCommensurateShift(f64),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

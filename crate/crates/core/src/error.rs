use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too small for the stencil: need at least {min} time levels and {min} radial points, got {nt} x {nr}")]
    GridTooSmall { min: usize, nt: usize, nr: usize },

    #[error("field parity is unset but the r = 0 stencil needs it")]
    ParityUnset,

    #[error("expected an odd-parity conjugate field (W = r u)")]
    ExpectedOddParity,

    #[error("vector-field order {0} exceeds the supported maximum of 3")]
    OrderTooHigh(usize),

    #[error("field grids or windows do not match")]
    GridMismatch,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("region {0} does not intersect the field")]
    RegionOutsideGrid(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("CFL ratio {0} exceeds the solver limit 0.9")]
    CflViolation(f64),

    #[error("blow-up suspected at t = {t}")]
    BlowUpSuspected { t: f64 },

    #[error("blow-up suspected while solving iterate {k} at t = {t}")]
    IterateBlowUp { k: usize, t: f64 },

    #[error("A_k did not decrease for three consecutive iterates (last k = {k})")]
    NonContraction { k: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

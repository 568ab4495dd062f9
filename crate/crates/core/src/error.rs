//! Crate-wide error type.
//!
//! Everything that can be rejected at a module boundary (bad grid parameters,
//! schedule evaluation out of range, non-finite state, failed fixed-point
//! iteration, ...) funnels into [`Error`] so callers get one `Result` alphabet.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Grid construction rejected (N not a power of two, bad dimension, ...).
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two fields (or a field and an operator) live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A scalar parameter is outside its documented range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// A schedule was evaluated outside its tabulated range.
    #[error("schedule evaluation at t = {t} outside tabulated range [{lo}, {hi}]")]
    ScheduleRange { t: f64, lo: f64, hi: f64 },

    /// Non-finite numbers showed up where finite data is required.
    #[error("non-finite data: {0}")]
    NonFinite(String),

    /// The Picard iteration stopped contracting.
    #[error("fixed-point iteration non-contractive (last ratio {ratio:.3e} >= 1); reduce dt below the step horizon")]
    NonContractive { ratio: f64 },

    /// Time stepping aborted mid-run; `t_last` is the last healthy time.
    #[error("time stepping aborted at t = {t_last}: {message}")]
    StepAborted { t_last: f64, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter { name, message: message.into() }
    }
}

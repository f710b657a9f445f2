use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("state {state} outside 1..={n_states}")]
    StateOutOfRange { state: usize, n_states: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("|kappa| = {kappa} exceeds the exponential overflow guard")]
    Overflow { kappa: f64 },
    #[error("path leaves [0, 1] at t = {t} (gamma = {value})")]
    Inadmissible { t: f64, value: f64 },
    #[error("maximisation bracket failed: {0}")]
    Bracket(String),
    #[error("probability underflow: {0}")]
    Underflow(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

use thiserror::Error;

use crate::model::{Direction, State};

/// Errors raised by the model, the samplers and the verifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state (n={n}, x={x}): {reason}")]
    InvalidState {
        n: u64,
        x: f64,
        reason: &'static str,
    },

    #[error("negative or non-finite duration {0}")]
    NegativeDuration(f64),

    #[error("invalid transition: jump {direction} from {state}")]
    InvalidTransition { direction: Direction, state: State },

    #[error(
        "spec violation: {field} intensity {value} at {state} exceeds declared_sup {declared_sup}"
    )]
    SpecViolation {
        field: Direction,
        state: State,
        value: f64,
        declared_sup: f64,
    },

    #[error("invalid intensity spec: {0}")]
    InvalidSpec(String),

    #[error("explosion suspected: more than {events} events before t={time}")]
    Explosion { events: usize, time: f64 },

    #[error("time {t} outside path window [0, {horizon}]")]
    OutOfWindow { t: f64, horizon: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("binning mismatch between empirical laws")]
    BinningMismatch,

    #[error("no stationary law: rho = {0} >= 1")]
    Unstable(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

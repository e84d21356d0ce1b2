use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("at least one baseline is required")]
    NoBaselines,

    #[error("expected {expected} phases, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("sample count {name} must be at least 1")]
    EmptySample { name: &'static str },

    #[error("counts are inconsistent: {clicks} clicks out of {total} events")]
    InvalidCounts { clicks: u64, total: u64 },

    #[error("invalid array configuration: {0}")]
    InvalidArray(String),

    #[error("ambiguous offset: first-baseline phase range {max_phase} reaches 2π")]
    AmbiguousWrap { max_phase: f64 },

    #[error("{0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

/// Checks `value ∈ [0, 2π)`.
pub(crate) fn in_turn(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if (0.0..std::f64::consts::TAU).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            range: "[0, 2π)",
        })
    }
}

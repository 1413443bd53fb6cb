use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(ValidationReport),

    #[error("{name} must be finite")]
    NonFinite { name: &'static str },

    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("need at least {min} {what}, got {got}")]
    TooFew {
        what: &'static str,
        got: usize,
        min: usize,
    },

    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),

    #[error("the scaling map is only defined for trajectories started at x0 = 0 (got {x0})")]
    NonZeroStart { x0: f64 },

    #[error("bound set exceeded its capacity of {0} molecules")]
    CapacityExceeded(usize),

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_finite<T: crate::Real>(name: &'static str, v: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { name })
    }
}

pub(crate) fn check_nonneg<T: crate::Real>(name: &'static str, v: T) -> Result<()> {
    check_finite(name, v)?;
    if v < T::zero() {
        Err(Error::Negative {
            name,
            value: v.as_f64(),
        })
    } else {
        Ok(())
    }
}

pub(crate) fn check_positive<T: crate::Real>(name: &'static str, v: T) -> Result<()> {
    check_finite(name, v)?;
    if v <= T::zero() {
        Err(Error::NonPositive {
            name,
            value: v.as_f64(),
        })
    } else {
        Ok(())
    }
}

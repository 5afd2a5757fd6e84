use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("parameter `{name}` must be non-negative and finite, got {value}")]
    NegativeParameter { name: &'static str, value: f64 },

    #[error("population must be non-negative, got {x}")]
    NegativeState { x: f64 },

    #[error("population must be strictly positive, got {x}")]
    NonPositiveState { x: f64 },

    #[error("time must be non-negative and finite, got {t}")]
    InvalidTime { t: f64 },

    #[error("a control rate is only accepted in scheduled mode")]
    UnexpectedControl,

    #[error("scheduled mode requires a control rate")]
    MissingControl,

    #[error("scheduled mode has no fixed vector field")]
    ScheduledModeUnsupported,

    #[error("per-capita growth is undefined at x = 0 under a constant quota")]
    ZeroPopulationUnderQuota,

    #[error("invalid time span [{a}, {b}]")]
    InvalidSpan { a: f64, b: f64 },

    #[error("step size must be positive and finite, got {dt}")]
    InvalidStep { dt: f64 },

    #[error("threshold must be non-negative and finite, got {value}")]
    InvalidThreshold { value: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("control {u} outside admissible range [0, {u_max}]")]
    ControlOutOfBounds { u: f64, u_max: f64 },

    #[error("costate multipliers cannot both vanish")]
    TrivialCostate,

    #[error("map denominator vanishes at x = {x}")]
    SingularDenominator { x: f64 },
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::NegativeParameter { name, value })
    }
}

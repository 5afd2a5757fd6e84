//! The logistic vector field under each harvesting regime, and the exact
//! solution of the unexploited model.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// Growth rate `r` and carrying capacity `k` of the logistic equation.
///
/// Both are checked to be positive and finite at construction; every
/// operation taking a `ModelParams` relies on that.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    r: f64,
    k: f64,
}

#[derive(Deserialize)]
struct RawParams {
    r: f64,
    k: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.r, raw.k)
    }
}

impl ModelParams {
    pub fn new(r: f64, k: f64) -> Result<Self> {
        Ok(Self {
            r: positive("r", r)?,
            k: positive("k", k)?,
        })
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Maximum sustainable harvest `rk/4`, reached at `x = k/2`.
    #[inline]
    pub fn max_sustainable_yield(&self) -> f64 {
        self.r * self.k / 4.0
    }

    /// Same growth rate, carrying capacity multiplied by `c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        Self::new(self.r, self.k * positive("c", c)?)
    }

    #[inline]
    pub(crate) fn logistic(&self, x: f64) -> f64 {
        self.r * x * (1.0 - x / self.k)
    }
}

/// Exploitation regime applied to the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarvestMode {
    Unexploited,
    /// Harvest proportional to the stock, `e·x`.
    ConstantEffort {
        e: f64,
    },
    /// Fixed absolute harvest `h` per unit time.
    ConstantQuota {
        h: f64,
    },
    /// Time-varying harvest `u(t)` supplied by a policy schedule.
    Scheduled,
}

impl HarvestMode {
    pub fn effort(e: f64) -> Result<Self> {
        Ok(Self::ConstantEffort {
            e: non_negative("effort", e)?,
        })
    }

    pub fn quota(h: f64) -> Result<Self> {
        Ok(Self::ConstantQuota {
            h: non_negative("quota", h)?,
        })
    }

    /// Harvest rate removed at population `x`, if the mode fixes one.
    pub fn harvest_rate(&self, x: f64) -> Option<f64> {
        match *self {
            HarvestMode::Unexploited | HarvestMode::Scheduled => None,
            HarvestMode::ConstantEffort { e } => Some(e * x),
            HarvestMode::ConstantQuota { h } => Some(h),
        }
    }
}

/// `ẋ` for the given mode. `u` must be present exactly when `mode` is
/// [`HarvestMode::Scheduled`].
///
/// `x = 0` is accepted: the quota field returns `-h` there and the others
/// return zero.
pub fn vector_field(p: &ModelParams, mode: &HarvestMode, x: f64, u: Option<f64>) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeState { x });
    }
    let growth = p.logistic(x);
    match (mode, u) {
        (HarvestMode::Scheduled, Some(u)) => Ok(growth - u),
        (HarvestMode::Scheduled, None) => Err(Error::MissingControl),
        (_, Some(_)) => Err(Error::UnexpectedControl),
        (HarvestMode::Unexploited, None) => Ok(growth),
        (HarvestMode::ConstantEffort { e }, None) => Ok(growth - e * x),
        (HarvestMode::ConstantQuota { h }, None) => Ok(growth - h),
    }
}

/// The factor `f` in `ẋ = x f(x)`.
pub fn per_capita_growth(p: &ModelParams, mode: &HarvestMode, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeState { x });
    }
    let base = p.r * (1.0 - x / p.k);
    match *mode {
        HarvestMode::Unexploited => Ok(base),
        HarvestMode::ConstantEffort { e } => Ok(base - e),
        HarvestMode::ConstantQuota { .. } if x == 0.0 => Err(Error::ZeroPopulationUnderQuota),
        HarvestMode::ConstantQuota { h } => Ok(base - h / x),
        HarvestMode::Scheduled => Err(Error::ScheduledModeUnsupported),
    }
}

/// Exact solution of the unexploited model,
/// `x(t) = x0 k e^{rt} / (k + x0 (e^{rt} - 1))`.
///
/// Evaluated as `k / (1 + (k/x0 - 1) e^{-rt})` so large `t` cannot overflow.
pub fn closed_form(p: &ModelParams, x0: f64, t: f64) -> Result<f64> {
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::NonPositiveState { x: x0 });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidTime { t });
    }
    Ok(p.k / (1.0 + (p.k / x0 - 1.0) * (-p.r * t).exp()))
}

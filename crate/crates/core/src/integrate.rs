//! Fixed-step classical Runge–Kutta integration of the harvested logistic
//! field, with extinction handling and threshold-crossing detection.

use serde::{Deserialize, Serialize};

use crate::dynamics::{vector_field, HarvestMode, ModelParams};
use crate::error::{Error, Result};

/// One point of a discretized solution. `u` is the harvest rate applied from
/// `t` until the next sample, `None` when nothing is harvested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    HorizonEnd,
    Extinction { t_ext: f64 },
}

/// Samples on a uniform grid. The last sample may instead sit on the
/// horizon or at the extinction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn is_extinct(&self) -> bool {
        matches!(self.termination, Termination::Extinction { .. })
    }

    /// Trapezoid-rule integral of the applied harvest rate.
    pub fn harvest_yield(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                0.5 * (b.t - a.t) * (a.u.unwrap_or(0.0) + b.u.unwrap_or(0.0))
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upward,
    Downward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub threshold: f64,
    pub t_cross: f64,
    pub direction: Direction,
}

/// Result of a single RK4 step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Advanced(f64),
    /// The state hit zero `offset` time units into the step.
    Extinct {
        offset: f64,
    },
}

/// One classical RK4 step of `ẋ = field(x)` from `x`.
///
/// Every stage state is checked; the first one that would go negative ends
/// the step, with the extinction time found by linear interpolation along
/// that stage's slope.
pub fn rk4_step<F>(field: F, x: f64, dt: f64) -> Result<StepOutcome>
where
    F: Fn(f64) -> Result<f64>,
{
    let hit_zero = |slope: f64, span: f64| StepOutcome::Extinct {
        offset: if slope < 0.0 {
            (x / -slope).clamp(0.0, span)
        } else {
            0.0
        },
    };

    let eval = |y: f64| -> Result<f64> {
        let slope = field(y)?;
        if slope.is_finite() {
            Ok(slope)
        } else {
            Err(Error::NonFinite { t: f64::NAN })
        }
    };

    let k1 = eval(x)?;
    let y2 = x + 0.5 * dt * k1;
    if y2 < 0.0 {
        return Ok(hit_zero(k1, 0.5 * dt));
    }
    let k2 = eval(y2)?;
    let y3 = x + 0.5 * dt * k2;
    if y3 < 0.0 {
        return Ok(hit_zero(k2, 0.5 * dt));
    }
    let k3 = eval(y3)?;
    let y4 = x + dt * k3;
    if y4 < 0.0 {
        return Ok(hit_zero(k3, dt));
    }
    let k4 = eval(y4)?;
    let next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if !next.is_finite() {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    if next < 0.0 {
        let offset = (dt * x / (x - next)).clamp(0.0, dt);
        return Ok(StepOutcome::Extinct { offset });
    }
    Ok(StepOutcome::Advanced(next))
}

pub(crate) fn check_span(x0: f64, (a, b): (f64, f64), dt: f64) -> Result<usize> {
    if !(x0 >= 0.0) || !x0.is_finite() {
        return Err(Error::NegativeState { x: x0 });
    }
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidSpan { a, b });
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep { dt });
    }
    Ok(((b - a) / dt + 1e-9).floor() as usize)
}

/// Grid time of step `i`, snapped onto the horizon when it lands there.
pub(crate) fn grid_time(a: f64, b: f64, dt: f64, i: usize) -> f64 {
    let t = a + i as f64 * dt;
    if (t - b).abs() <= 1e-9 * dt {
        b
    } else {
        t
    }
}

/// Integrate `mode` from `x0` over `[a, b]` with fixed step `dt`.
pub fn integrate(
    p: &ModelParams,
    mode: &HarvestMode,
    x0: f64,
    span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    if matches!(mode, HarvestMode::Scheduled) {
        return Err(Error::ScheduledModeUnsupported);
    }
    let steps = check_span(x0, span, dt)?;
    let (a, b) = span;
    let field = |x: f64| vector_field(p, mode, x, None);

    let mut samples = Vec::with_capacity(steps + 1);
    let mut x = x0;
    let mut t = a;
    samples.push(Sample {
        t,
        x,
        u: mode.harvest_rate(x),
    });

    for i in 1..=steps {
        let outcome = rk4_step(field, x, dt).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { t },
            other => other,
        })?;
        match outcome {
            StepOutcome::Advanced(next) => {
                x = next;
                t = grid_time(a, b, dt, i);
                samples.push(Sample {
                    t,
                    x,
                    u: mode.harvest_rate(x),
                });
            }
            StepOutcome::Extinct { offset } => {
                let t_ext = record_extinction(&mut samples, t + offset);
                return Ok(Trajectory {
                    samples,
                    termination: Termination::Extinction { t_ext },
                });
            }
        }
    }
    Ok(Trajectory {
        samples,
        termination: Termination::HorizonEnd,
    })
}

/// Append the terminal zero sample, or convert the last sample when the
/// extinction time coincides with it.
pub(crate) fn record_extinction(samples: &mut Vec<Sample>, t_ext: f64) -> f64 {
    let last = samples.last_mut().expect("trajectory is never empty");
    if t_ext <= last.t {
        last.x = 0.0;
        last.u = None;
        last.t
    } else {
        samples.push(Sample {
            t: t_ext,
            x: 0.0,
            u: None,
        });
        t_ext
    }
}

/// Scan consecutive samples for sign changes of `x - threshold`.
///
/// A sample exactly on a threshold carries no sign; a crossing is reported
/// when the sign differs from the last non-zero one. A trajectory that
/// starts on a threshold therefore reports nothing until it leaves and
/// comes back.
pub fn detect_crossings(samples: &[Sample], thresholds: &[f64]) -> Vec<CrossingEvent> {
    let mut events = Vec::new();
    for &threshold in thresholds {
        let mut last_sign = 0.0_f64;
        for w in samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let da = a.x - threshold;
            let db = b.x - threshold;
            if last_sign == 0.0 && da != 0.0 {
                last_sign = da.signum();
            }
            if db == 0.0 || last_sign == 0.0 || db.signum() == last_sign {
                continue;
            }
            let t_cross = if da == 0.0 {
                a.t
            } else {
                a.t + (b.t - a.t) * da / (da - db)
            };
            let direction = if db > 0.0 {
                Direction::Upward
            } else {
                Direction::Downward
            };
            events.push(CrossingEvent {
                threshold,
                t_cross,
                direction,
            });
            last_sign = db.signum();
        }
    }
    events.sort_by(|a, b| a.t_cross.total_cmp(&b.t_cross));
    events
}

/// [`integrate`] followed by crossing detection against `thresholds`.
pub fn integrate_with_events(
    p: &ModelParams,
    mode: &HarvestMode,
    x0: f64,
    span: (f64, f64),
    dt: f64,
    thresholds: &[f64],
) -> Result<(Trajectory, Vec<CrossingEvent>)> {
    if let Some(&value) = thresholds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidThreshold { value });
    }
    let traj = integrate(p, mode, x0, span, dt)?;
    let events = detect_crossings(&traj.samples, thresholds);
    Ok((traj, events))
}

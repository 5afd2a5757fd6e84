//! Optimal harvesting of a logistic population.
//!
//! The problem maximizes the total catch `∫₀ᵇ u dt` subject to
//! `ẋ = rx(1 - x/k) - u`, `x(0) = x0`, `x(b) ≥ x_b` and `0 ≤ u ≤ u_max`.
//! With the normal multiplier `λ₀ = 1` the Hamiltonian is
//! `H = u + λ(rx(1 - x/k) - u)`, linear in `u`, with switching function
//! `∂H/∂u = 1 - λ`. The singular arc is `x = k/2` held by `u = rk/4`.
//!
//! Policies are synthesized as state-triggered schedules rather than by
//! integrating the adjoint:
//!
//! - `u_max ≥ rk/4`: steer to `k/2` with the extreme control that moves
//!   towards it (`u_max` from above, `0` from below), then stay on the arc;
//! - `u_max < rk/4`: harvest `u_max` above the lower equilibrium of the
//!   quota model with `h = u_max`, and nothing below it.

use serde::{Deserialize, Serialize};

use crate::dynamics::{vector_field, HarvestMode, ModelParams};
use crate::error::{non_negative, positive, Error, Result};
use crate::integrate::{
    check_span, grid_time, record_extinction, rk4_step, Direction, Sample, StepOutcome,
    Termination, Trajectory,
};
use crate::stability::{quota_roots, TANGENCY_TOLERANCE};

/// Width of the dead band around the hysteresis threshold, relative to `k`.
pub const HYSTERESIS_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlProblem {
    pub params: ModelParams,
    /// End of the horizon `[0, b]`.
    pub horizon: f64,
    pub x0: f64,
    /// Terminal floor `x_b`.
    pub x_floor: f64,
    pub u_max: f64,
}

impl ControlProblem {
    pub fn new(
        params: ModelParams,
        horizon: f64,
        x0: f64,
        x_floor: f64,
        u_max: f64,
    ) -> Result<Self> {
        Ok(Self {
            params,
            horizon: positive("b", horizon)?,
            x0: positive("x0", x0)?,
            x_floor: non_negative("xb", x_floor)?,
            u_max: positive("umax", u_max)?,
        })
    }

    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        Self::new(self.params, self.horizon, x0, self.x_floor, self.u_max)
    }

    pub fn regime(&self) -> Regime {
        let cap = self.params.max_sustainable_yield();
        if self.u_max >= cap * (1.0 - TANGENCY_TOLERANCE) {
            Regime::AboveSingularCap
        } else {
            Regime::BelowSingularCap
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    Abnormal,
    Normal,
}

impl Multiplier {
    pub fn value(self) -> f64 {
        match self {
            Multiplier::Abnormal => 0.0,
            Multiplier::Normal => 1.0,
        }
    }
}

/// Multipliers `(λ₀, λ)`; they may not both vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costate {
    lambda0: Multiplier,
    lambda: f64,
}

impl Costate {
    pub fn new(lambda0: Multiplier, lambda: f64) -> Result<Self> {
        if lambda0 == Multiplier::Abnormal && lambda == 0.0 {
            return Err(Error::TrivialCostate);
        }
        Ok(Self { lambda0, lambda })
    }

    pub fn normal(lambda: f64) -> Self {
        Self {
            lambda0: Multiplier::Normal,
            lambda,
        }
    }

    pub fn lambda0(&self) -> Multiplier {
        self.lambda0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `H(x, u, λ₀, λ) = λ₀ u + λ (rx(1 - x/k) - u)`.
pub fn hamiltonian(prob: &ControlProblem, x: f64, u: f64, costate: &Costate) -> Result<f64> {
    if !(0.0..=prob.u_max).contains(&u) {
        return Err(Error::ControlOutOfBounds {
            u,
            u_max: prob.u_max,
        });
    }
    let rate = vector_field(&prob.params, &HarvestMode::Scheduled, x, Some(u))?;
    Ok(costate.lambda0.value() * u + costate.lambda * rate)
}

/// `∂H/∂u = λ₀ - λ`.
pub fn switching_function(costate: &Costate) -> f64 {
    costate.lambda0.value() - costate.lambda
}

/// `λ̇ = -∂H/∂x = -λ (r/k)(k - 2x)`.
pub fn adjoint_rhs(prob: &ControlProblem, x: f64, lambda: f64) -> f64 {
    let p = &prob.params;
    -lambda * (p.r() / p.k()) * (p.k() - 2.0 * x)
}

/// The singular extremal `k/2` and the singular control `rk/4`.
pub fn singular_pair(p: &ModelParams) -> (f64, f64) {
    (p.k() / 2.0, p.max_sustainable_yield())
}

/// `constant + slope·u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineInU {
    pub constant: f64,
    pub slope: f64,
}

impl AffineInU {
    pub fn eval(&self, u: f64) -> f64 {
        self.constant + self.slope * u
    }
}

/// `d/dt (∂H/∂u) = -λ̇ = λ (r/k)(k - 2x)`; it does not involve `u`.
pub fn switching_rate(prob: &ControlProblem, x: f64, lambda: f64) -> AffineInU {
    AffineInU {
        constant: -adjoint_rhs(prob, x, lambda),
        slope: 0.0,
    }
}

/// Second time derivative of `∂H/∂u` on the singular arc in the normalized
/// form `-(r/k)(k - 2x)² - (2rx/k)(k - x) + 2u`.
pub fn switching_acceleration(prob: &ControlProblem, x: f64) -> AffineInU {
    let (r, k) = (prob.params.r(), prob.params.k());
    AffineInU {
        constant: -(r / k) * (k - 2.0 * x).powi(2) - (2.0 * r * x / k) * (k - x),
        slope: 2.0,
    }
}

/// Second time derivative of `∂H/∂u` by the chain rule, unnormalized:
/// `λ̇ (r/k)(k - 2x) - 2λ (r/k) ẋ`. Equals [`switching_acceleration`] scaled
/// by `λr/k`.
pub fn switching_acceleration_chain_rule(prob: &ControlProblem, x: f64, lambda: f64) -> AffineInU {
    let p = &prob.params;
    let rk = p.r() / p.k();
    let lambda_dot = adjoint_rhs(prob, x, lambda);
    AffineInU {
        constant: lambda_dot * rk * (p.k() - 2.0 * x) - 2.0 * lambda * rk * p.logistic(x),
        slope: 2.0 * lambda * rk,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GohVerdict {
    Satisfied,
    Violated,
}

/// Generalized Legendre (Goh) conditions evaluated at the singular pair
/// with `λ₀ = λ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GohCertificate {
    /// Second difference of `H` in `u`.
    pub d2h_du2: f64,
    /// `∂/∂u` of `d/dt(∂H/∂u)`; must vanish.
    pub first_order_u_slope: f64,
    /// `d/dt(∂H/∂u)` at `x = k/2`.
    pub first_order: f64,
    /// Normalized `d²/dt²(∂H/∂u)` at `(k/2, rk/4)`.
    pub second_order: f64,
    /// `-∂/∂u` of the normalized second derivative; must be nonpositive.
    pub strengthened: f64,
    /// Same quantity from the unnormalized chain rule, `-2r/k`.
    pub strengthened_chain_rule: f64,
    pub verdict: GohVerdict,
}

pub fn goh_certificate(prob: &ControlProblem) -> GohCertificate {
    let (xs, us) = singular_pair(&prob.params);
    let costate = Costate::normal(1.0);
    let h = |u: f64| hamiltonian(prob, xs, u, &costate).expect("u within bounds");
    let (u0, u2) = (0.0, prob.u_max);
    let u1 = 0.5 * (u0 + u2);
    let d2h_du2 = (h(u2) - 2.0 * h(u1) + h(u0)) / (u1 - u0).powi(2);

    let first = switching_rate(prob, xs, 1.0);
    let second = switching_acceleration(prob, xs);
    let chain = switching_acceleration_chain_rule(prob, xs, 1.0);
    let strengthened = -second.slope;
    let strengthened_chain_rule = -chain.slope;

    let scale = prob.params.r() * prob.params.k() / prob.u_max.powi(2);
    let satisfied = d2h_du2.abs() <= 1e-9 * scale.max(1.0)
        && first.slope == 0.0
        && strengthened <= 0.0
        && strengthened_chain_rule <= 0.0;
    GohCertificate {
        d2h_du2,
        first_order_u_slope: first.slope,
        first_order: first.eval(us),
        second_order: second.eval(us),
        strengthened,
        strengthened_chain_rule,
        verdict: if satisfied {
            GohVerdict::Satisfied
        } else {
            GohVerdict::Violated
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `u_max ≥ rk/4`: the singular pair is admissible.
    AboveSingularCap,
    BelowSingularCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    BangMax,
    Zero,
    Singular,
}

/// What ends a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "trigger", rename_all = "snake_case")]
pub enum Trigger {
    Horizon,
    Crossing {
        threshold: f64,
        direction: Direction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: ArcKind,
    pub level: f64,
    pub until: Trigger,
}

/// Switching levels of the feedback policy used when `u_max < rk/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hysteresis {
    /// Lower equilibrium of the quota model with `h = u_max`.
    pub threshold: f64,
    /// Harvesting stops below this level.
    pub lower_switch: f64,
    /// Harvesting resumes above this level.
    pub upper_switch: f64,
}

/// A harvesting plan. Segments run in order; with `hysteresis` set they
/// repeat cyclically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySchedule {
    pub regime: Regime,
    pub segments: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hysteresis: Option<Hysteresis>,
    /// State the policy steers towards.
    pub target_state: f64,
    /// Whether `target_state ≥ x_b`. A `false` here flags a plan that cannot
    /// meet the terminal floor once it has settled.
    pub target_meets_floor: bool,
}

impl PolicySchedule {
    fn new(prob: &ControlProblem, regime: Regime, segments: Vec<Segment>, target: f64) -> Self {
        Self {
            regime,
            segments,
            hysteresis: None,
            target_state: target,
            target_meets_floor: target >= prob.x_floor,
        }
    }

    /// No harvest over the whole horizon.
    pub fn no_harvest(prob: &ControlProblem) -> Self {
        let seg = Segment {
            kind: ArcKind::Zero,
            level: 0.0,
            until: Trigger::Horizon,
        };
        Self::new(prob, prob.regime(), vec![seg], prob.params.k())
    }

    /// Singular control `rk/4` applied from `t = 0` whatever `x0` is.
    ///
    /// From above `k/2` this approaches the arc asymptotically instead of
    /// reaching it in finite time, so it harvests less than
    /// [`synthesize_policy`]. Kept for comparison.
    pub fn singular_from_start(prob: &ControlProblem) -> Result<Self> {
        let (xs, us) = singular_pair(&prob.params);
        if prob.regime() != Regime::AboveSingularCap {
            return Err(Error::ControlOutOfBounds {
                u: us,
                u_max: prob.u_max,
            });
        }
        let seg = Segment {
            kind: ArcKind::Singular,
            level: us.min(prob.u_max),
            until: Trigger::Horizon,
        };
        Ok(Self::new(prob, Regime::AboveSingularCap, vec![seg], xs))
    }

    /// Checks that every level is admissible for `prob`.
    pub fn validate(&self, prob: &ControlProblem) -> Result<()> {
        for seg in &self.segments {
            if !(0.0..=prob.u_max).contains(&seg.level) {
                return Err(Error::ControlOutOfBounds {
                    u: seg.level,
                    u_max: prob.u_max,
                });
            }
        }
        Ok(())
    }

    fn next_index(&self, i: usize) -> usize {
        if self.hysteresis.is_some() {
            (i + 1) % self.segments.len()
        } else {
            (i + 1).min(self.segments.len() - 1)
        }
    }
}

/// Bang-singular policy for `u_max ≥ rk/4`, hysteresis policy otherwise.
pub fn synthesize_policy(prob: &ControlProblem) -> PolicySchedule {
    let p = &prob.params;
    let (xs, us) = singular_pair(p);
    let bang = |until| Segment {
        kind: ArcKind::BangMax,
        level: prob.u_max,
        until,
    };
    let zero = |until| Segment {
        kind: ArcKind::Zero,
        level: 0.0,
        until,
    };

    match prob.regime() {
        Regime::AboveSingularCap => {
            // in the tangent case u_max itself is the singular level
            let singular = Segment {
                kind: ArcKind::Singular,
                level: us.min(prob.u_max),
                until: Trigger::Horizon,
            };
            let to_arc = |direction| Trigger::Crossing {
                threshold: xs,
                direction,
            };
            let segments = if prob.x0 > xs {
                vec![bang(to_arc(Direction::Downward)), singular]
            } else if prob.x0 < xs {
                vec![zero(to_arc(Direction::Upward)), singular]
            } else {
                vec![singular]
            };
            PolicySchedule::new(prob, Regime::AboveSingularCap, segments, xs)
        }
        Regime::BelowSingularCap => {
            let roots = quota_roots(p, prob.u_max);
            let (lower, upper) = (roots[0], roots[1]);
            let band = (0.5 * HYSTERESIS_BAND * p.k())
                .min(0.5 * lower)
                .min(0.25 * (upper - lower));
            let hyst = Hysteresis {
                threshold: lower,
                lower_switch: lower - band,
                upper_switch: lower + band,
            };
            let stop = bang(Trigger::Crossing {
                threshold: hyst.lower_switch,
                direction: Direction::Downward,
            });
            let resume = zero(Trigger::Crossing {
                threshold: hyst.upper_switch,
                direction: Direction::Upward,
            });
            let segments = if prob.x0 > lower {
                vec![stop, resume]
            } else {
                vec![resume, stop]
            };
            let mut schedule = PolicySchedule::new(prob, Regime::BelowSingularCap, segments, upper);
            schedule.hysteresis = Some(hyst);
            schedule
        }
    }
}

/// A schedule segment pinned to the times it was active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSegment {
    pub kind: ArcKind,
    pub level: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRun {
    pub trajectory: Trajectory,
    #[serde(rename = "yield")]
    pub harvest_yield: f64,
    pub segments: Vec<ResolvedSegment>,
    pub switch_times: Vec<f64>,
    pub terminal_state: f64,
    /// `x(b) ≥ x_b` and the horizon was reached.
    pub terminal_feasible: bool,
    /// Largest `|x - k/2|` seen while on a singular segment.
    pub singular_drift: f64,
    pub reanchored: bool,
}

impl PolicyRun {
    pub fn is_extinct(&self) -> bool {
        self.trajectory.is_extinct()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// Snap the state onto `k/2` when a singular segment is entered through
    /// a crossing. Without it the interpolation offset is carried along the
    /// arc, which is only semi-stable.
    pub reanchor: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { reanchor: true }
    }
}

pub fn simulate_policy(
    prob: &ControlProblem,
    schedule: &PolicySchedule,
    dt: f64,
) -> Result<PolicyRun> {
    simulate_policy_with(prob, schedule, dt, SimulationOptions::default())
}

pub fn simulate_policy_with(
    prob: &ControlProblem,
    schedule: &PolicySchedule,
    dt: f64,
    opts: SimulationOptions,
) -> Result<PolicyRun> {
    schedule.validate(prob)?;
    if schedule.segments.is_empty() {
        return Err(Error::MissingControl);
    }
    let p = &prob.params;
    let (xs, _) = singular_pair(p);
    let (a, b) = (0.0, prob.horizon);
    let steps = check_span(prob.x0, (a, b), dt)?;

    let mut idx = 0;
    let mut seg = schedule.segments[0];
    let mut seg_start = a;
    let mut resolved = Vec::new();
    let mut switch_times = Vec::new();
    let mut drift: f64 = 0.0;

    let mut t = a;
    let mut x = prob.x0;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(Sample {
        t,
        x,
        u: Some(seg.level),
    });
    if seg.kind == ArcKind::Singular {
        drift = (x - xs).abs();
    }

    let mut termination = Termination::HorizonEnd;
    for i in 1..=steps {
        let u = seg.level;
        let field = |y: f64| vector_field(p, &HarvestMode::Scheduled, y, Some(u));
        let outcome = rk4_step(field, x, dt).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { t },
            other => other,
        })?;
        let mut next = match outcome {
            StepOutcome::Advanced(next) => next,
            StepOutcome::Extinct { offset } => {
                let t_ext = record_extinction(&mut samples, t + offset);
                termination = Termination::Extinction { t_ext };
                t = t_ext;
                break;
            }
        };
        let t_next = grid_time(a, b, dt, i);

        if let Trigger::Crossing {
            threshold,
            direction,
        } = seg.until
        {
            let crossed = match direction {
                Direction::Downward => x > threshold && next <= threshold,
                Direction::Upward => x < threshold && next >= threshold,
            };
            if crossed {
                let t_cross = t + (t_next - t) * (x - threshold) / (x - next);
                resolved.push(ResolvedSegment {
                    kind: seg.kind,
                    level: seg.level,
                    t_start: seg_start,
                    t_end: t_cross,
                });
                switch_times.push(t_cross);
                idx = schedule.next_index(idx);
                seg = schedule.segments[idx];
                seg_start = t_cross;
                if seg.kind == ArcKind::Singular && opts.reanchor && threshold == xs {
                    next = xs;
                }
            }
        }

        x = next;
        t = t_next;
        if seg.kind == ArcKind::Singular {
            drift = drift.max((x - xs).abs());
        }
        samples.push(Sample {
            t,
            x,
            u: Some(seg.level),
        });
    }
    resolved.push(ResolvedSegment {
        kind: seg.kind,
        level: seg.level,
        t_start: seg_start,
        t_end: t,
    });

    let trajectory = Trajectory {
        samples,
        termination,
    };
    let terminal_state = trajectory.last().x;
    let reached_horizon = matches!(termination, Termination::HorizonEnd);
    Ok(PolicyRun {
        harvest_yield: trajectory.harvest_yield(),
        terminal_feasible: reached_horizon && terminal_state >= prob.x_floor,
        trajectory,
        segments: resolved,
        switch_times,
        terminal_state,
        singular_drift: drift,
        reanchored: opts.reanchor,
    })
}

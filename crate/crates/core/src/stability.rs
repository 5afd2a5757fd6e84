//! Equilibria of the harvested logistic models and their stability, decided
//! with the Lyapunov function `V(x) = x - x̃ - x̃ ln(x/x̃)`.
//!
//! Along solutions of `ẋ = x f(x)` this function satisfies
//! `V̇(x) = (x - x̃) f(x)`, so the verdict for a positive equilibrium only
//! depends on the sign of `f` on each side of it:
//!
//! - `f > 0` below and `f < 0` above, down to zero: globally asymptotically
//!   stable in the positive half-line;
//! - the same pattern but only down to the next equilibrium `x̃₁`: stable
//!   with region of stability `{x > x̃₁}`;
//! - `V̇ > 0` on either side: unstable.
//!
//! The sign of `f` is sampled on a log-spaced grid and at one interior
//! point of every interval between consecutive equilibria.

use serde::{Deserialize, Serialize};

use crate::dynamics::{per_capita_growth, HarvestMode, ModelParams};
use crate::error::{Error, Result};

/// Relative band around `h = rk/4` treated as the tangent quota case.
pub const TANGENCY_TOLERANCE: f64 = 1e-12;

const GRID_POINTS: usize = 10_000;
const GRID_LOW: f64 = 1e-6;
const GRID_HIGH: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    GloballyAsymptoticallyStable,
    Unstable,
    /// Every solution starting above `region_lower` converges here.
    StableWithRegion {
        region_lower: f64,
    },
    /// The zero state; excluded from the Lyapunov analysis.
    Trivial,
}

/// Which argument produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    ZeroState,
    /// `f > 0` on `(0, x̃)` and `f < 0` on `(x̃, ∞)`.
    SingleSpeciesCriterion,
    /// `V̇ > 0` on an interval adjacent to `x̃`.
    InstabilityTheorem,
    /// The single-species sign pattern holds above the next lower equilibrium.
    RegionOfStability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub value: f64,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub rationale: Rationale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotaCase {
    /// `h > rk/4`: the population always goes extinct.
    NoEquilibrium,
    /// `h = rk/4`: a single semi-stable point at `k/2`.
    Tangent,
    /// `h < rk/4`.
    TwoEquilibria,
}

impl QuotaCase {
    pub fn of(p: &ModelParams, h: f64) -> Self {
        let cap = p.max_sustainable_yield();
        if (h - cap).abs() <= TANGENCY_TOLERANCE * cap {
            QuotaCase::Tangent
        } else if h > cap {
            QuotaCase::NoEquilibrium
        } else {
            QuotaCase::TwoEquilibria
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub mode: HarvestMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<QuotaCase>,
    pub equilibria: Vec<Equilibrium>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Roots of `rx(1 - x/k) = h`, ascending.
///
/// The larger root is `(k + √disc)/2`; the smaller comes from the product
/// of the roots, `x̃₁ x̃₂ = hk/r`, which stays accurate when `h ≪ rk/4`.
pub fn quota_roots(p: &ModelParams, h: f64) -> Vec<f64> {
    let (r, k) = (p.r(), p.k());
    match QuotaCase::of(p, h) {
        QuotaCase::NoEquilibrium => vec![],
        QuotaCase::Tangent => vec![k / 2.0],
        QuotaCase::TwoEquilibria => {
            let disc = (k * k - 4.0 * h * k / r).max(0.0);
            let upper = 0.5 * (k + disc.sqrt());
            let lower = (h * k / r) / upper;
            vec![lower, upper]
        }
    }
}

/// All equilibria of `mode`, ascending.
pub fn equilibria(p: &ModelParams, mode: &HarvestMode) -> Result<Vec<f64>> {
    let k = p.k();
    Ok(match *mode {
        HarvestMode::Unexploited => vec![0.0, k],
        HarvestMode::ConstantEffort { e } if e < p.r() => vec![0.0, k * (1.0 - e / p.r())],
        HarvestMode::ConstantEffort { .. } => vec![0.0],
        HarvestMode::ConstantQuota { h } => quota_roots(p, h),
        HarvestMode::Scheduled => return Err(Error::ScheduledModeUnsupported),
    })
}

/// `V(x) = x - x̃ - x̃ ln(x/x̃)`.
pub fn lyapunov_value(x: f64, eq: f64) -> Result<f64> {
    check_positive(x)?;
    check_positive(eq)?;
    // x̃ (d - ln(1 + d)) with d = x/x̃ - 1 keeps full precision near the minimum
    let d = x / eq - 1.0;
    Ok((eq * (d - d.ln_1p())).max(0.0))
}

/// `V'(x) = 1 - x̃/x`.
pub fn lyapunov_gradient(x: f64, eq: f64) -> Result<f64> {
    check_positive(x)?;
    check_positive(eq)?;
    Ok(1.0 - eq / x)
}

/// `V̇(x) = (x - x̃) f(x)` along solutions of `mode`.
pub fn lyapunov_derivative(p: &ModelParams, mode: &HarvestMode, x: f64, eq: f64) -> Result<f64> {
    check_positive(eq)?;
    Ok((x - eq) * per_capita_growth(p, mode, x)?)
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveState { x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Negative,
    Positive,
}

/// Log-spaced sample points on `(1e-6 k, 1e2 k)`.
pub fn sign_grid(p: &ModelParams) -> Vec<f64> {
    let (lo, hi) = ((GRID_LOW * p.k()).ln(), (GRID_HIGH * p.k()).ln());
    (1..=GRID_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / (GRID_POINTS + 1) as f64).exp())
        .collect()
}

/// Sign of `f` on the open interval `(lo, hi)`; `hi = ∞` for the last one.
fn interval_sign(
    p: &ModelParams,
    mode: &HarvestMode,
    grid: &[f64],
    lo: f64,
    hi: f64,
) -> Result<Sign> {
    let interior = if hi.is_finite() {
        0.5 * (lo + hi)
    } else {
        2.0 * lo.max(p.k())
    };
    let margin = 1e-9;
    let points = grid
        .iter()
        .copied()
        .filter(|&x| x > lo * (1.0 + margin) && (x < hi * (1.0 - margin)))
        .chain(std::iter::once(interior));

    let mut sign = None;
    for x in points {
        let f = per_capita_growth(p, mode, x)?;
        let s = if f > 0.0 {
            Sign::Positive
        } else if f < 0.0 {
            Sign::Negative
        } else {
            continue;
        };
        match sign {
            None => sign = Some(s),
            Some(prev) if prev != s => {
                // f changes sign only at equilibria; reaching here means a root was missed
                debug_assert!(false, "sign change of f inside ({lo}, {hi}) at {x}");
            }
            _ => {}
        }
    }
    Ok(sign.unwrap_or(Sign::Negative))
}

/// Equilibria of `mode` with a stability verdict for each.
pub fn classify(p: &ModelParams, mode: &HarvestMode) -> Result<StabilityReport> {
    let values = equilibria(p, mode)?;
    let grid = sign_grid(p);
    let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();

    let mut out = Vec::with_capacity(values.len());
    if values.first() == Some(&0.0) {
        out.push(Equilibrium {
            value: 0.0,
            verdict: Verdict::Trivial,
            rationale: Rationale::ZeroState,
        });
    }
    for (i, &eq) in positive.iter().enumerate() {
        let lo = if i == 0 { 0.0 } else { positive[i - 1] };
        let hi = positive.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let below = interval_sign(p, mode, &grid, lo, eq)?;
        let above = interval_sign(p, mode, &grid, eq, hi)?;
        let (verdict, rationale) = match (below, above) {
            (Sign::Positive, Sign::Negative) if lo == 0.0 => (
                Verdict::GloballyAsymptoticallyStable,
                Rationale::SingleSpeciesCriterion,
            ),
            (Sign::Positive, Sign::Negative) => (
                Verdict::StableWithRegion { region_lower: lo },
                Rationale::RegionOfStability,
            ),
            _ => (Verdict::Unstable, Rationale::InstabilityTheorem),
        };
        out.push(Equilibrium {
            value: eq,
            verdict,
            rationale,
        });
    }

    let case = match *mode {
        HarvestMode::ConstantQuota { h } => Some(QuotaCase::of(p, h)),
        _ => None,
    };
    let note = match (mode, case) {
        (_, Some(QuotaCase::NoEquilibrium)) => {
            Some("quota exceeds rk/4: every solution reaches extinction in finite time".to_owned())
        }
        (HarvestMode::ConstantEffort { .. }, _) if positive.is_empty() => {
            Some("effort at or above r: the population declines to zero".to_owned())
        }
        _ => None,
    };

    Ok(StabilityReport {
        mode: *mode,
        case,
        equilibria: out,
        note,
    })
}

//! Discrete logistic maps on the integers.
//!
//! Two discretizations of `ẋ = rx(1 - x/k)` on a unit-step grid:
//!
//! - [`MapKind::StreipertZ`] evaluates the growth at the next state,
//!   `x(t+1) - x(t) = r x(t+1)(1 - x(t)/k)`, i.e.
//!   `x(t+1) = x(t) / (1 - r(1 - x(t)/k))`. The denominator can vanish or
//!   turn negative, so positive starts may produce negative or undefined
//!   states (`r = 2, k = 5, x = 2` gives `-10`).
//! - [`MapKind::NonstandardZ`] evaluates the crowding term at the next
//!   state instead, `x(t+1) - x(t) = r x(t)(1 - x(t+1)/k)`, i.e.
//!   `x(t+1) = (r+1) k x(t) / (k + r x(t))`, which maps `(0, ∞)` into itself
//!   and has exactly the fixed points `0` and `k`.
//!
//! Explicit Euler is included as a baseline.

use serde::{Deserialize, Serialize};

use crate::dynamics::{closed_form, ModelParams};
use crate::error::{positive, Error, Result};

/// Streipert denominators at or below this magnitude are treated as zero.
pub const DENOMINATOR_EPS: f64 = 1e-14;
/// Orbit convergence threshold, relative to `k`.
pub const CONVERGENCE_TOL: f64 = 1e-12;
/// Witnesses kept by [`positivity_scan`].
pub const MAX_WITNESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapKind {
    StreipertZ,
    NonstandardZ,
    ExplicitEulerZ {
        step: f64,
    },
    /// Experimental step-`h` variant `x ↦ (rh + 1) k x / (k + rh x)` of the
    /// nonstandard map. Reduces to [`MapKind::NonstandardZ`] at `h = 1`.
    NonstandardScaled {
        step: f64,
    },
}

impl MapKind {
    pub fn euler(step: f64) -> Result<Self> {
        Ok(Self::ExplicitEulerZ {
            step: positive("step", step)?,
        })
    }

    pub fn nonstandard_scaled(step: f64) -> Result<Self> {
        Ok(Self::NonstandardScaled {
            step: positive("step", step)?,
        })
    }

    /// Time advanced by one application of the map.
    pub fn time_step(&self) -> f64 {
        match *self {
            MapKind::StreipertZ | MapKind::NonstandardZ => 1.0,
            MapKind::ExplicitEulerZ { step } | MapKind::NonstandardScaled { step } => step,
        }
    }

    pub fn apply(&self, p: &ModelParams, x: f64) -> Result<f64> {
        match *self {
            MapKind::StreipertZ => streipert_step(p, x),
            MapKind::NonstandardZ => nsfd_step(p, x),
            MapKind::ExplicitEulerZ { step } => {
                check_state(x)?;
                Ok(x + step * p.logistic(x))
            }
            MapKind::NonstandardScaled { step } => {
                check_state(x)?;
                let rh = p.r() * step;
                Ok((rh + 1.0) * p.k() * x / (p.k() + rh * x))
            }
        }
    }
}

fn check_state(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeState { x })
    }
}

/// `x / (1 - r(1 - x/k))`. May return a negative value; fails only when the
/// denominator vanishes, i.e. at `x = k(r - 1)/r`.
pub fn streipert_step(p: &ModelParams, x: f64) -> Result<f64> {
    check_state(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let k = p.k();
    // k (1 - r(1 - x/k)), with k - x formed first so that exact inputs stay exact
    let scaled = k - p.r() * (k - x);
    if (scaled / k).abs() <= DENOMINATOR_EPS {
        return Err(Error::SingularDenominator { x });
    }
    Ok(x * k / scaled)
}

/// `(r + 1) k x / (k + r x)`.
pub fn nsfd_step(p: &ModelParams, x: f64) -> Result<f64> {
    check_state(x)?;
    let (r, k) = (p.r(), p.k());
    Ok((r + 1.0) * k * x / (k + r * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Negative,
    Undefined,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// An orbit `x_0, x_1, …`, cut at the first violation. A negative or
/// non-finite value is kept as the last entry; an undefined step has no
/// entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub kind: MapKind,
    pub orbit: Vec<f64>,
    pub violations: Vec<Violation>,
    pub limit: Option<f64>,
}

impl OrbitReport {
    pub fn first_violation(&self) -> Option<Violation> {
        self.violations.first().copied()
    }

    pub fn is_positive(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn iterate(kind: MapKind, p: &ModelParams, x0: f64, n: usize) -> Result<OrbitReport> {
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(Error::NegativeState { x: x0 });
    }
    let mut orbit = Vec::with_capacity(n + 1);
    orbit.push(x0);
    let mut violations = Vec::new();
    let mut x = x0;
    for index in 1..=n {
        let next = match kind.apply(p, x) {
            Ok(v) => v,
            Err(Error::SingularDenominator { .. }) => {
                violations.push(Violation {
                    index,
                    kind: ViolationKind::Undefined,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        orbit.push(next);
        if !next.is_finite() {
            violations.push(Violation {
                index,
                kind: ViolationKind::NonFinite,
            });
            break;
        }
        if next < 0.0 {
            violations.push(Violation {
                index,
                kind: ViolationKind::Negative,
            });
            break;
        }
        x = next;
    }
    let limit = match orbit[..] {
        [.., prev, last]
            if violations.is_empty() && (last - prev).abs() < CONVERGENCE_TOL * p.k() =>
        {
            Some(last)
        }
        _ => None,
    };
    Ok(OrbitReport {
        kind,
        orbit,
        violations,
        limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub r: f64,
    pub k: f64,
    pub x0: f64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub orbits: usize,
    pub violation_count: usize,
    pub witnesses: Vec<Witness>,
    /// Violation-free orbits that settled.
    pub converged: usize,
    /// Settled orbits from `x0 > 0` whose limit is not `k` (within `1e-9 k`).
    pub converged_off_capacity: usize,
}

/// Iterate every `(params, x0)` case `n` times and count the orbits that
/// leave the non-negative half-line or hit an undefined step.
pub fn positivity_scan<I>(kind: MapKind, cases: I, n: usize) -> Result<ScanSummary>
where
    I: IntoIterator<Item = (ModelParams, f64)>,
{
    let mut summary = ScanSummary {
        orbits: 0,
        violation_count: 0,
        witnesses: Vec::new(),
        converged: 0,
        converged_off_capacity: 0,
    };
    for (p, x0) in cases {
        let report = iterate(kind, &p, x0, n)?;
        summary.orbits += 1;
        if let Some(v) = report.first_violation() {
            summary.violation_count += 1;
            if summary.witnesses.len() < MAX_WITNESSES {
                summary.witnesses.push(Witness {
                    r: p.r(),
                    k: p.k(),
                    x0,
                    index: v.index,
                });
            }
        } else if let Some(limit) = report.limit {
            summary.converged += 1;
            if x0 > 0.0 && (limit - p.k()).abs() > 1e-9 * p.k() {
                summary.converged_off_capacity += 1;
            }
        }
    }
    Ok(summary)
}

/// Cartesian product of growth rates, capacities and starting points given
/// as fractions of `k`.
pub fn grid_cases(rs: &[f64], ks: &[f64], x0_fractions: &[f64]) -> Result<Vec<(ModelParams, f64)>> {
    let mut out = Vec::with_capacity(rs.len() * ks.len() * x0_fractions.len());
    for &r in rs {
        for &k in ks {
            let p = ModelParams::new(r, k)?;
            out.extend(x0_fractions.iter().map(|&f| (p, f * k)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub kind: MapKind,
    /// `max_t |orbit(t) - x(t)|` against the exact continuous solution, or
    /// `None` when the orbit has a violation.
    pub max_deviation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
    pub steps: usize,
}

/// Compare an orbit with the exact continuous solution at the map's grid
/// times.
pub fn consistency_compare(
    kind: MapKind,
    p: &ModelParams,
    x0: f64,
    n: usize,
) -> Result<ConsistencyReport> {
    if !(x0 > 0.0) {
        return Err(Error::NonPositiveState { x: x0 });
    }
    let report = iterate(kind, p, x0, n)?;
    if let Some(v) = report.first_violation() {
        return Ok(ConsistencyReport {
            kind,
            max_deviation: None,
            violation: Some(v),
            steps: n,
        });
    }
    let dt = kind.time_step();
    let mut worst: f64 = 0.0;
    for (i, &x) in report.orbit.iter().enumerate() {
        worst = worst.max((x - closed_form(p, x0, i as f64 * dt)?).abs());
    }
    Ok(ConsistencyReport {
        kind,
        max_deviation: Some(worst),
        violation: None,
        steps: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(r: f64, k: f64) -> ModelParams {
        ModelParams::new(r, k).unwrap()
    }

    #[test]
    fn streipert_examples() {
        let p = params(2.0, 5.0);
        assert_eq!(streipert_step(&p, 2.0).unwrap(), -10.0);
        assert_eq!(streipert_step(&p, 5.0).unwrap(), 5.0);
        assert_eq!(
            streipert_step(&p, 2.5),
            Err(Error::SingularDenominator { x: 2.5 })
        );
        assert!(streipert_step(&p, -1.0).is_err());
        assert!(streipert_step(&p, 0.0).unwrap().is_sign_positive());
    }

    #[test]
    fn streipert_zero_locus() {
        for (r, k) in [(2.0, 5.0), (4.0, 1.0), (1.25, 8.0), (10.0, 0.5)] {
            let p = params(r, k);
            let x = k * (r - 1.0) / r;
            assert!(matches!(
                streipert_step(&p, x),
                Err(Error::SingularDenominator { .. })
            ));
            // away from the locus the step is defined
            assert!(streipert_step(&p, x * (1.0 + 1e-6)).is_ok());
        }
        // r < 1: no locus on the positive half-line
        let p = params(0.5, 3.0);
        for i in 0..1000 {
            assert!(streipert_step(&p, i as f64 * 0.01).is_ok());
        }
    }

    #[test]
    fn nsfd_examples() {
        let p = params(2.0, 5.0);
        assert!((nsfd_step(&p, 2.0).unwrap() - 30.0 / 9.0).abs() < 1e-15);
        for (r, k) in [(0.1, 150.0), (2.0, 5.0), (9.0, 0.01)] {
            let p = params(r, k);
            assert_eq!(nsfd_step(&p, k).unwrap(), k);
            assert_eq!(nsfd_step(&p, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn scaled_variant_reduces_to_unit_step() {
        let p = params(0.7, 2.0);
        let kind = MapKind::nonstandard_scaled(1.0).unwrap();
        for x in [0.0, 0.3, 2.0, 7.0] {
            assert_eq!(kind.apply(&p, x).unwrap(), nsfd_step(&p, x).unwrap());
        }
        assert!(MapKind::nonstandard_scaled(0.0).is_err());
        assert!(MapKind::euler(-1.0).is_err());
    }

    #[test]
    fn iterate_examples() {
        let p = params(2.0, 5.0);
        let rep = iterate(MapKind::NonstandardZ, &p, 2.0, 50).unwrap();
        assert_eq!(rep.orbit.len(), 51);
        assert!(rep.orbit.iter().all(|&x| x > 0.0));
        assert!((rep.limit.unwrap() - 5.0).abs() < 1e-9);
        // monotone approach from below
        assert!(rep.orbit.windows(2).all(|w| w[1] >= w[0]));

        let rep = iterate(MapKind::StreipertZ, &p, 2.0, 5).unwrap();
        assert_eq!(
            rep.first_violation(),
            Some(Violation {
                index: 1,
                kind: ViolationKind::Negative
            })
        );
        assert_eq!(rep.orbit.len(), 2);
        assert!(rep.limit.is_none());

        let rep = iterate(MapKind::StreipertZ, &p, 2.5, 5).unwrap();
        assert_eq!(
            rep.first_violation(),
            Some(Violation {
                index: 1,
                kind: ViolationKind::Undefined
            })
        );
        assert_eq!(rep.orbit, vec![2.5]);

        for kind in [
            MapKind::StreipertZ,
            MapKind::NonstandardZ,
            MapKind::euler(0.5).unwrap(),
        ] {
            let rep = iterate(kind, &p, 5.0, 10).unwrap();
            assert!(rep.orbit.iter().all(|&x| x == 5.0));
            assert_eq!(rep.limit, Some(5.0));
        }
        assert!(iterate(MapKind::NonstandardZ, &p, -1.0, 3).is_err());
        let rep = iterate(MapKind::NonstandardZ, &p, 2.0, 0).unwrap();
        assert_eq!(rep.orbit, vec![2.0]);
        assert_eq!(rep.limit, None);
    }

    #[test]
    fn nsfd_high_precision_orbit() {
        // 1/x obeys an affine recursion, so with r=2, k=5, x0=2 the orbit is
        // x_n = 10·3^n / (3 + 2·3^n)
        let p = params(2.0, 5.0);
        let rep = iterate(MapKind::NonstandardZ, &p, 2.0, 20).unwrap();
        for (n, &x) in rep.orbit.iter().enumerate() {
            let g = 3f64.powi(n as i32);
            let exact = 10.0 * g / (3.0 + 2.0 * g);
            assert!((x - exact).abs() < 1e-14 * exact, "n={n}: {x} vs {exact}");
        }
    }

    #[test]
    fn euler_can_overshoot_negative() {
        let p = params(3.0, 1.0);
        let rep = iterate(MapKind::euler(1.0).unwrap(), &p, 1.9, 5).unwrap();
        assert_eq!(rep.first_violation().unwrap().kind, ViolationKind::Negative);
    }

    #[test]
    fn scan_examples() {
        let rs: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let ks: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let fracs: Vec<f64> = (1..=30).map(|i| i as f64 * 0.1).collect();
        let cases = grid_cases(&rs, &ks, &fracs).unwrap();

        let s = positivity_scan(MapKind::NonstandardZ, cases.iter().copied(), 100).unwrap();
        assert_eq!(s.orbits, 6000);
        assert_eq!(s.violation_count, 0);
        assert_eq!(s.converged_off_capacity, 0);
        assert!(s.converged > 0);

        let s = positivity_scan(MapKind::StreipertZ, cases.iter().copied(), 100).unwrap();
        assert!(s.violation_count > 0);
        assert!(s.witnesses.len() <= MAX_WITNESSES);

        let s = positivity_scan(MapKind::StreipertZ, [(params(2.0, 5.0), 2.0)], 10).unwrap();
        assert_eq!(
            s.witnesses,
            vec![Witness {
                r: 2.0,
                k: 5.0,
                x0: 2.0,
                index: 1
            }]
        );

        let low_r: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
        let inside: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
        let cases = grid_cases(&low_r, &ks, &inside).unwrap();
        let s = positivity_scan(MapKind::StreipertZ, cases, 100).unwrap();
        assert_eq!(s.violation_count, 0);
    }

    #[test]
    fn consistency_examples() {
        let p = params(0.1, 150.0);
        let rep = consistency_compare(MapKind::NonstandardZ, &p, 30.0, 200).unwrap();
        let dev = rep.max_deviation.unwrap();
        assert!(dev.is_finite() && dev > 0.0);
        let orbit = iterate(MapKind::NonstandardZ, &p, 30.0, 200).unwrap();
        assert!((orbit.orbit[200] - 150.0).abs() < 1e-3);
        assert!((closed_form(&p, 30.0, 200.0).unwrap() - 150.0).abs() < 1e-3);

        for kind in [
            MapKind::StreipertZ,
            MapKind::NonstandardZ,
            MapKind::euler(0.1).unwrap(),
        ] {
            let rep = consistency_compare(kind, &p, 150.0, 50).unwrap();
            assert_eq!(rep.max_deviation, Some(0.0));
        }

        let rep = consistency_compare(MapKind::StreipertZ, &params(2.0, 5.0), 2.0, 5).unwrap();
        assert_eq!(rep.max_deviation, None);
        assert_eq!(rep.violation.unwrap().index, 1);
        assert!(consistency_compare(MapKind::NonstandardZ, &p, 0.0, 5).is_err());
    }

    #[test]
    fn euler_consistency_improves_with_step() {
        let p = params(0.1, 150.0);
        let coarse = consistency_compare(MapKind::euler(1.0).unwrap(), &p, 30.0, 100).unwrap();
        let fine = consistency_compare(MapKind::euler(0.1).unwrap(), &p, 30.0, 1000).unwrap();
        assert!(fine.max_deviation.unwrap() < 0.2 * coarse.max_deviation.unwrap());
    }

    #[test]
    fn nsfd_positive_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let r = 10.0 * (1.0 - rng.gen::<f64>());
            let k = 10.0 * (1.0 - rng.gen::<f64>());
            let x = 3.0 * k * (1.0 - rng.gen::<f64>());
            let p = params(r, k);
            let y = nsfd_step(&p, x).unwrap();
            assert!(y > 0.0);
            // trapping: (0, k) and (k, ∞) are invariant and the step moves towards k
            if x < k {
                assert!(x <= y && y <= k, "r={r} k={k} x={x} y={y}");
            } else if x > k {
                assert!(k <= y && y <= x, "r={r} k={k} x={x} y={y}");
            }
            // step - x = r x (k - x)/(k + r x), step - k = k (x - k)/(k + r x)
            let d = k + r * x;
            assert!((y - x - r * x * (k - x) / d).abs() <= 1e-12 * k.max(x));
            assert!((y - k - k * (x - k) / d).abs() <= 1e-12 * k.max(x));
        }
    }

    #[test]
    fn nsfd_fixed_points_are_zero_and_capacity() {
        let p = params(1.3, 4.0);
        for i in 1..4000 {
            let x = i as f64 * 0.003;
            if (x - 4.0).abs() < 1e-9 {
                continue;
            }
            assert!((nsfd_step(&p, x).unwrap() - x).abs() > 0.0, "x={x}");
        }
    }

    #[test]
    fn orbit_json_round_trip() {
        let rep = iterate(MapKind::euler(0.25).unwrap(), &params(2.0, 5.0), 2.0, 4).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<OrbitReport>(&json).unwrap(), rep);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn nsfd_orbits_stay_positive_and_approach_capacity(
                r in 1e-3f64..10.0,
                k in 1e-3f64..10.0,
                frac in 1e-6f64..3.0,
            ) {
                let p = ModelParams::new(r, k).unwrap();
                let rep = iterate(MapKind::NonstandardZ, &p, frac * k, 100).unwrap();
                prop_assert!(rep.is_positive());
                for w in rep.orbit.windows(2) {
                    prop_assert!(w[1] > 0.0);
                    prop_assert!((w[1] - k).abs() <= (w[0] - k).abs() + 4.0 * f64::EPSILON * k);
                }
                if let Some(limit) = rep.limit {
                    prop_assert!((limit - k).abs() <= 1e-9 * k);
                }
            }

            #[test]
            fn streipert_below_capacity_with_slow_growth(
                r in 1e-3f64..0.999,
                k in 1e-3f64..10.0,
                frac in 1e-6f64..0.999_999,
            ) {
                let p = ModelParams::new(r, k).unwrap();
                let x = frac * k;
                let y = streipert_step(&p, x).unwrap();
                prop_assert!(x < y && y <= k);
            }
        }
    }
}

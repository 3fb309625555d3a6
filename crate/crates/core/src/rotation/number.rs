//! Certified rotation numbers, rational comparisons and closest returns.

use rayon::prelude::*;
use serde::Serialize;

use crate::circlemap::{circle_distance, AnalyticCircleMap, LiftPoint, DEFAULT_CRITICAL_TOL, EXTREMUM_GRID};
use crate::error::{Error, Result};
use crate::rotation::cf::ContinuedFraction;

/// Default bracket width for certified rotation numbers.
pub const DEFAULT_ROTATION_TOL: f64 = 1e-10;

/// Default orbit budget before falling back to a Birkhoff average.
pub const DEFAULT_ROTATION_BUDGET: usize = 10_000_000;

/// Relative size of `F^q(0) - p` below which the orbit sign is not trusted.
const ORBIT_EPS: f64 = 1e-15;

/// Position of the rotation number relative to a rational `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RationalOrder {
    Below,
    Equal,
    Above,
}

/// Forward orbit of a point that is advanced on demand.
#[derive(Debug, Clone)]
pub struct OrbitCursor<'a> {
    map: &'a AnalyticCircleMap,
    point: LiftPoint,
    time: usize,
}

impl<'a> OrbitCursor<'a> {
    pub fn new(map: &'a AnalyticCircleMap, x: f64) -> Self {
        Self { map, point: LiftPoint::from_real(x), time: 0 }
    }

    /// `F^m(x)` for `m` not smaller than the current time.
    pub fn advance_to(&mut self, m: usize) -> LiftPoint {
        debug_assert!(m >= self.time);
        while self.time < m {
            self.point = self.map.step(self.point);
            self.time += 1;
        }
        self.point
    }

    pub fn time(&self) -> usize {
        self.time
    }
}

/// The stored orbit `F^m(x)`, `m = 0..len`.
pub fn orbit_from(map: &AnalyticCircleMap, x: f64, len: usize) -> Vec<LiftPoint> {
    let mut out = Vec::with_capacity(len + 1);
    let mut p = LiftPoint::from_real(x);
    out.push(p);
    for _ in 0..len {
        p = map.step(p);
        out.push(p);
    }
    out
}

/// The stored orbit `F^m(0)`, `m = 0..len`.
pub fn orbit_of_zero(map: &AnalyticCircleMap, len: usize) -> Vec<LiftPoint> {
    orbit_from(map, 0.0, len)
}

/// Point the closest returns and partitions are built from: the first
/// critical point, or 0 when the map has none.
pub fn base_point(map: &AnalyticCircleMap) -> Result<f64> {
    Ok(map.critical_points(DEFAULT_CRITICAL_TOL)?.first().map_or(0.0, |c| c.location))
}

/// `F^q(x) - x - p`, evaluated on the winding representation.
fn displacement_excess(map: &AnalyticCircleMap, x: f64, p: i64, q: usize) -> f64 {
    let mut pt = LiftPoint { winding: 0, frac: x };
    for _ in 0..q {
        pt = map.step(pt);
    }
    pt.minus_int(p) - x
}

/// Golden-section search for the minimum of `g` on `[lo, hi]`.
fn golden_min(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..iters {
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = g(x2);
        }
    }
    if g1 < g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Extrema of `G(x) = F^q(x) - x - p` over the circle: dense grid plus local polish.
pub fn excess_extrema(map: &AnalyticCircleMap, p: i64, q: usize) -> (f64, f64) {
    let n = EXTREMUM_GRID;
    let h = 1.0 / n as f64;
    let vals: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| displacement_excess(map, i as f64 * h, p, q))
        .collect();
    let (imin, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let (imax, _) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let g = |x: f64| displacement_excess(map, x, p, q);
    let xmin = imin as f64 * h;
    let xmax = imax as f64 * h;
    let (_, mn) = golden_min(g, xmin - h, xmin + h, 60);
    let (_, mx) = golden_min(|x| -g(x), xmax - h, xmax + h, 60);
    (mn.min(vals[imin]), (-mx).max(vals[imax]))
}

/// Compares `ρ(f)` with `p/q` through the sign of `F^q(x) - x - p`.
pub fn compare_to_rational(map: &AnalyticCircleMap, p: i64, q: i64) -> Result<RationalOrder> {
    if q < 1 {
        return Err(Error::InvalidArgument(format!("denominator must be positive (got {q})")));
    }
    map.require_homeomorphism()?;
    let (mn, mx) = excess_extrema(map, p, q as usize);
    let tol = ORBIT_EPS * q as f64;
    Ok(if mn > tol {
        RationalOrder::Above
    } else if mx < -tol {
        RationalOrder::Below
    } else {
        RationalOrder::Equal
    })
}

/// Seeds tried by [`probe_order`] before the full grid.
const PROBE_SEEDS: usize = 16;

/// Cheap version of [`compare_to_rational`] for large `q`.
///
/// Off the rational, `F^q(x) - x - p` has one strict sign, so any seed where it
/// clears the rounding bound decides the order. Seeds of both signs mean
/// equality. `None` when every seed is ambiguous.
fn probe_order(map: &AnalyticCircleMap, p: i64, q: i64) -> Option<RationalOrder> {
    let tol = ORBIT_EPS * q as f64;
    let signs: Vec<i8> = (0..PROBE_SEEDS)
        .into_par_iter()
        .map(|i| {
            let g = displacement_excess(map, (i as f64 + 0.5) / PROBE_SEEDS as f64, p, q as usize);
            if g > tol {
                1
            } else if g < -tol {
                -1
            } else {
                0
            }
        })
        .collect();
    match (signs.contains(&1), signs.contains(&-1)) {
        (true, true) => Some(RationalOrder::Equal),
        (true, false) => Some(RationalOrder::Above),
        (false, true) => Some(RationalOrder::Below),
        (false, false) => None,
    }
}

/// Outcome of [`rotation_number`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationNumber {
    /// Point estimate of ρ.
    pub estimate: f64,
    /// Bound on `|ρ - estimate|`; not rigorous when `certified` is false.
    pub error: f64,
    /// Lower end of the rational bracket.
    pub lower: (i64, i64),
    /// Upper end of the rational bracket.
    pub upper: (i64, i64),
    /// True when the bracket was established by rational comparisons.
    pub certified: bool,
    /// True when ρ was shown to equal `lower == upper`.
    pub rational: bool,
    /// Length of the orbit of 0 that was computed.
    pub orbit_length: usize,
}

impl RotationNumber {
    pub fn width(&self) -> f64 {
        let (a, b) = (self.lower, self.upper);
        (b.0 as f64 / b.1 as f64) - (a.0 as f64 / a.1 as f64)
    }

    /// Continued fraction shared by every number in the bracket.
    ///
    /// For a rational result this is the exact expansion. Otherwise the bracket
    /// ends are Farey neighbours; the expansion runs up to the one with the
    /// smaller denominator, which is a convergent of every point between them.
    pub fn expansion(&self) -> ContinuedFraction {
        if self.rational {
            return ContinuedFraction::of_rational(self.lower.0, self.lower.1)
                .expect("positive denominator");
        }
        let (older, newer) = if self.lower.1 < self.upper.1 {
            (self.lower, self.upper)
        } else {
            (self.upper, self.lower)
        };
        let newer_cf = ContinuedFraction::of_rational(newer.0, newer.1).expect("positive denominator");
        let k = newer_cf.quotients();
        if k.len() == 1 {
            return ContinuedFraction::of_rational(older.0, older.1)
                .and_then(|c| ContinuedFraction::from_quotients(c.quotients().to_vec()))
                .expect("positive denominator");
        }
        let mut quotients = k[..k.len() - 1].to_vec();
        let prefix = ContinuedFraction::from_quotients(quotients.clone()).expect("valid prefix");
        if prefix.convergents().last() != Some(&older) {
            quotients.push(k[k.len() - 1] - 1);
        }
        ContinuedFraction::from_quotients(quotients).expect("valid quotients")
    }
}

/// Rotation number of `map` bracketed between Farey neighbours.
///
/// Descends the Stern–Brocot tree using the sign of `F^q(0) - p`, which
/// decides `ρ ≥ p/q` or `ρ ≤ p/q`. Ambiguous signs are settled by
/// [`compare_to_rational`]. If the orbit budget runs out first, a Birkhoff
/// average is returned with `certified == false`.
pub fn rotation_number(map: &AnalyticCircleMap, tol: f64, budget: usize) -> Result<RotationNumber> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive (got {tol})")));
    }
    map.require_homeomorphism()?;
    let mut orbit = OrbitCursor::new(map, 0.0);
    let first = orbit.advance_to(1);
    let n0 = first.winding;
    if first.frac == 0.0 {
        return Ok(RotationNumber {
            estimate: n0 as f64,
            error: 0.0,
            lower: (n0, 1),
            upper: (n0, 1),
            certified: true,
            rational: true,
            orbit_length: 1,
        });
    }
    let (mut lo, mut hi) = ((n0, 1i64), (n0 + 1, 1i64));
    // consecutive steps that kept the same endpoint; a long run hints at ρ equal to it
    let mut stalled = (lo, 0usize);
    loop {
        let gap = 1.0 / (lo.1 as f64 * hi.1 as f64);
        if gap <= tol {
            let a = lo.0 as f64 / lo.1 as f64;
            let b = hi.0 as f64 / hi.1 as f64;
            return Ok(RotationNumber {
                estimate: 0.5 * (a + b),
                error: 0.5 * gap,
                lower: lo,
                upper: hi,
                certified: true,
                rational: false,
                orbit_length: orbit.time(),
            });
        }
        let (p, q) = (lo.0 + hi.0, lo.1 + hi.1);
        if q as usize > budget {
            break;
        }
        let r = orbit.advance_to(q as usize).minus_int(p);
        let above = if r.abs() <= ORBIT_EPS * q as f64 {
            match probe_order(map, p, q).map_or_else(|| compare_to_rational(map, p, q), Ok)? {
                RationalOrder::Equal => {
                    return Ok(RotationNumber {
                        estimate: p as f64 / q as f64,
                        error: 0.0,
                        lower: (p, q),
                        upper: (p, q),
                        certified: true,
                        rational: true,
                        orbit_length: orbit.time(),
                    })
                }
                RationalOrder::Above => true,
                RationalOrder::Below => false,
            }
        } else {
            r > 0.0
        };
        if above {
            lo = (p, q);
        } else {
            hi = (p, q);
        }
        let kept = if above { hi } else { lo };
        stalled = if kept == stalled.0 { (kept, stalled.1 + 1) } else { (kept, 1) };
        if stalled.1 >= STALL_CHECK && stalled.1.is_power_of_two() && compare_to_rational(map, kept.0, kept.1)? == RationalOrder::Equal {
            return Ok(RotationNumber {
                estimate: kept.0 as f64 / kept.1 as f64,
                error: 0.0,
                lower: kept,
                upper: kept,
                certified: true,
                rational: true,
                orbit_length: orbit.time(),
            });
        }
    }
    let end = orbit.advance_to(budget.max(1));
    let a = lo.0 as f64 / lo.1 as f64;
    let b = hi.0 as f64 / hi.1 as f64;
    let birkhoff = (end.value() / budget.max(1) as f64).clamp(a, b);
    Ok(RotationNumber {
        estimate: birkhoff,
        error: (1.0 / budget.max(1) as f64).min(b - a),
        lower: lo,
        upper: hi,
        certified: false,
        rational: false,
        orbit_length: orbit.time(),
    })
}

/// Steps with a fixed bracket end after which that end is tested for equality.
///
/// The test costs about `EXTREMUM_GRID · q` map evaluations, so it only runs
/// once the stalled descent has spent comparable orbit work, and again at
/// every doubling of the stall.
const STALL_CHECK: usize = 512;

/// Certified irrational rotation number or an error explaining why not.
pub fn certified_irrational(map: &AnalyticCircleMap, tol: f64, budget: usize) -> Result<RotationNumber> {
    let rn = rotation_number(map, tol, budget)?;
    if rn.rational {
        return Err(Error::RationalRotation { p: rn.lower.0, q: rn.lower.1 });
    }
    if !rn.certified {
        return Err(Error::Uncertified { budget });
    }
    Ok(rn)
}

/// Convergent ladder of `ρ(f)` with at least `levels` entries.
pub fn ladder(map: &AnalyticCircleMap, levels: usize) -> Result<Vec<(i64, i64)>> {
    let mut tol = DEFAULT_ROTATION_TOL;
    loop {
        let rn = certified_irrational(map, tol, DEFAULT_ROTATION_BUDGET * 10)?;
        let cv = rn.expansion().convergents();
        if cv.len() >= levels {
            return Ok(cv);
        }
        if tol < 1e-15 {
            return Err(Error::AccuracyFault(format!(
                "only {} convergents resolvable in double precision",
                cv.len()
            )));
        }
        tol *= 1e-2;
    }
}

/// Times at which the orbit of [`base_point`] comes closer to it than ever before.
///
/// From a non-critical point of a critical map, metric distortion can make
/// the distance records skip some `q_n`, so the critical point is used.
///
/// The result is cross-checked against the convergent denominators of the
/// certified rotation number; a disagreement is an accuracy fault.
pub fn closest_return_times(map: &AnalyticCircleMap, levels: usize) -> Result<Vec<i64>> {
    map.require_homeomorphism()?;
    closest_return_times_from(map, base_point(map)?, levels)
}

/// [`closest_return_times`] for the orbit of `x0`.
pub fn closest_return_times_from(map: &AnalyticCircleMap, x0: f64, levels: usize) -> Result<Vec<i64>> {
    map.require_homeomorphism()?;
    let mut records: Vec<i64> = Vec::with_capacity(levels);
    let mut best = f64::INFINITY;
    let mut p = LiftPoint::from_real(x0);
    let mut m: i64 = 0;
    while records.len() < levels {
        m += 1;
        if m as usize > DEFAULT_ROTATION_BUDGET * 10 {
            return Err(Error::Uncertified { budget: DEFAULT_ROTATION_BUDGET * 10 });
        }
        p = map.step(p);
        let d = circle_distance(p.frac, x0);
        if d == 0.0 {
            return Err(Error::RationalRotation { p: p.winding, q: m });
        }
        if d < best {
            best = d;
            records.push(m);
        }
    }
    let times = dedup_denominators(&ladder(map, records.len() + 1)?);
    if times.len() < records.len() {
        return Err(Error::AccuracyFault(format!(
            "convergent ladder resolves {} return times, {} requested",
            times.len(),
            records.len()
        )));
    }
    if times[..records.len()] != records[..] {
        return Err(Error::AccuracyFault(format!(
            "closest returns {records:?} disagree with convergent denominators {:?}",
            &times[..records.len()]
        )));
    }
    Ok(records)
}

fn dedup_denominators(cv: &[(i64, i64)]) -> Vec<i64> {
    let mut out: Vec<i64> = Vec::new();
    for &(_, q) in cv {
        if out.last() != Some(&q) {
            out.push(q);
        }
    }
    out
}

/// `max_x (F^q)'(x)` over a uniform grid, by the chain rule along each orbit.
pub fn max_iterate_derivative(map: &AnalyticCircleMap, q: usize, grid: usize) -> f64 {
    (0..grid)
        .into_par_iter()
        .map(|i| map.lift_iterate_with_derivative(i as f64 / grid as f64, q).1)
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Empirical return-derivative constant at level `n`: the maximum of `(f^{q_n})'`.
pub fn max_return_derivative(map: &AnalyticCircleMap, n: usize, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()));
    }
    let cv = ladder(map, n + 1)?;
    Ok(max_iterate_derivative(map, cv[n].1 as usize, grid))
}

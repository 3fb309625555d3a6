//! Irrational Arnold tongues in monotone families and their slope.
//!
//! For a family `F_{a,ν}(x) = x + a + P(x) + ν D(x)` the parameter `a` moves
//! the rotation number monotonically. The tongue point `a(ν)` with
//! `ρ = α` is pinned between the parameters `a_n` where
//! `F^{q_n}_{a_n}(0) = p_n`: `ρ(a_n) = p_n/q_n` exactly, and consecutive
//! convergents lie on opposite sides of `α`. Each `a_n` is the root of a
//! strictly increasing function and is found by safeguarded Newton, so no
//! floating rotation-number estimate enters the bracket.
//!
//! The slope of the tongue comes from the (−1)-measure `μ` of the map at the
//! tongue point:
//!
//! > da/dν = −∫ ∂F/∂ν(f⁻¹x) dμ / ∫ ∂F/∂a(f⁻¹x) dμ.

use rayon::prelude::*;
use serde::Serialize;

use crate::circlemap::{AnalyticCircleMap, LiftPoint, MapClass, TrigPolynomial, DEFAULT_CLASSIFY_DELTA};
use crate::error::{Error, Result};
use crate::measure::{integrate_pullback, solve_s_measure, GridMeasure, SolveOptions, DEFAULT_BINS};
use crate::rotation::{rotation_number, ContinuedFraction};

/// Default bracket width for tongue points.
pub const DEFAULT_TOL_A: f64 = 1e-12;

/// Parameter family `x + a + P(x) + ν D(x)` with `∂F/∂a ≡ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneFamily {
    base: TrigPolynomial,
    direction: TrigPolynomial,
}

impl MonotoneFamily {
    pub fn new(base: TrigPolynomial, direction: TrigPolynomial) -> Result<Self> {
        if !base.is_finite() || !direction.is_finite() {
            return Err(Error::InvalidArgument("family coefficients must be finite".into()));
        }
        Ok(Self { base, direction })
    }

    /// `x + a + ν sin 2πx`.
    pub fn arnold() -> Self {
        Self { base: TrigPolynomial::default(), direction: TrigPolynomial::sin(1, 1.0) }
    }

    pub fn base(&self) -> &TrigPolynomial {
        &self.base
    }

    pub fn direction(&self) -> &TrigPolynomial {
        &self.direction
    }

    pub fn map(&self, a: f64, nu: f64) -> Result<AnalyticCircleMap> {
        let p = self.base.add_scaled(nu, &self.direction);
        AnalyticCircleMap::new(a + p.constant, p.sine, p.cosine)
    }

    /// `∂F/∂ν` at `x`.
    pub fn d_nu(&self, x: f64) -> f64 {
        self.direction.eval(x)
    }

    /// `∂F/∂a`, identically one.
    pub fn d_a(&self, _x: f64) -> f64 {
        1.0
    }

    pub fn is_homeomorphism(&self, nu: f64) -> Result<bool> {
        Ok(self.map(0.0, nu)?.classify(DEFAULT_CLASSIFY_DELTA) != MapClass::NotHomeomorphism)
    }

    /// Largest `ν ≥ 0` keeping the family inside homeomorphisms.
    pub fn homeomorphism_limit(&self) -> Result<f64> {
        if !self.is_homeomorphism(0.0)? {
            return Err(Error::InvalidArgument("family is not a homeomorphism at ν = 0".into()));
        }
        let mut hi = 1.0;
        while self.is_homeomorphism(hi)? {
            hi *= 2.0;
            if hi > 1e12 {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.is_homeomorphism(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// `F_a^q(0) - p` and its `a`-derivative.
fn orbit_excess(map: &AnalyticCircleMap, p: i64, q: usize) -> (f64, f64) {
    let mut pt = LiftPoint::from_real(0.0);
    let mut d = 0.0;
    for _ in 0..q {
        d = map.slope(pt.frac) * d + 1.0;
        pt = map.step(pt);
    }
    (pt.minus_int(p), d)
}

/// Root of the increasing function `a ↦ F_a^q(0) - p` inside `[lo, hi]`.
fn periodic_parameter(family: &MonotoneFamily, nu: f64, p: i64, q: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let eval = |a: f64| -> Result<(f64, f64)> { Ok(orbit_excess(&family.map(a, nu)?, p, q)) };
    let (glo, _) = eval(lo)?;
    let (ghi, _) = eval(hi)?;
    if glo > 0.0 || ghi < 0.0 {
        return Err(Error::AccuracyFault(format!(
            "parameter bracket [{lo}, {hi}] does not enclose the {p}/{q} orbit"
        )));
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (g, dg) = eval(a)?;
        if g == 0.0 {
            return Ok(a);
        }
        if g < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let newton = a - g / dg;
        let next = if dg > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let scale = 2.0 * f64::EPSILON * (1.0 + a.abs());
        if (next - a).abs() <= scale || hi - lo <= scale {
            return Ok(next);
        }
        a = next;
    }
    Err(Error::NoConvergence { what: "tongue parameter", iterations: 300 })
}

/// A certified parameter bracket for a point on the `α`-tongue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TongueSolution {
    /// Best parameter, the last periodic root.
    pub a: f64,
    /// Distance between the two final periodic roots, which enclose the tongue point.
    pub width: f64,
    /// `(a_n, p_n, q_n)` on the side where `p_n/q_n < α`.
    pub below: (f64, i64, i64),
    /// `(a_n, p_n, q_n)` on the side where `p_n/q_n > α`.
    pub above: (f64, i64, i64),
}

/// Solves `ρ(F_{a,ν}) = α` for `a` to bracket width `tol_a`.
pub fn solve_tongue_point(
    family: &MonotoneFamily,
    alpha: &ContinuedFraction,
    nu: f64,
    tol_a: f64,
) -> Result<TongueSolution> {
    if !(tol_a > 0.0) {
        return Err(Error::InvalidArgument("tol_a must be positive".into()));
    }
    let map0 = family.map(0.0, nu)?;
    map0.require_homeomorphism()?;
    let offset = map0.offset();
    let amp = map0.amplitude() + 1e-12;
    let ladder = alpha.convergents();
    let mut roots: Vec<(f64, i64, i64)> = Vec::new();
    let mut width = f64::INFINITY;
    for (p, q) in ladder {
        let r = p as f64 / q as f64 - offset;
        let (mut lo, mut hi) = (r - amp, r + amp);
        if roots.len() >= 2 {
            let (x, y) = (roots[roots.len() - 1].0, roots[roots.len() - 2].0);
            lo = lo.max(x.min(y));
            hi = hi.min(x.max(y));
        }
        let a = periodic_parameter(family, nu, p, q as usize, lo, hi)?;
        roots.push((a, p, q));
        let k = roots.len();
        if k >= 2 {
            width = (roots[k - 1].0 - roots[k - 2].0).abs();
            if width <= tol_a {
                let (x, y) = (roots[k - 1], roots[k - 2]);
                // ladder index parity tells which side of α a convergent sits on
                let last_below = (k - 1) % 2 == 0;
                let (below, above) = if last_below { (x, y) } else { (y, x) };
                return Ok(TongueSolution { a: x.0, width, below, above });
            }
        }
    }
    Err(Error::DepthExhausted { width })
}

/// `da/dν` from the (−1)-measure `mu` of the map at the tongue point `(a, ν)`.
pub fn tongue_derivative(family: &MonotoneFamily, a: f64, nu: f64, mu: &GridMeasure) -> Result<f64> {
    let map = family.map(a, nu)?;
    let num = integrate_pullback(mu, &map, |x| family.d_nu(x))?;
    let den = integrate_pullback(mu, &map, |x| family.d_a(x))?;
    if den.abs() < 1e-6 {
        return Err(Error::AccuracyFault(format!("transversality fails: denominator {den:e}")));
    }
    Ok(-num / den)
}

/// Finite-difference stencil used by [`fd_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stencil {
    Central,
    /// Second-order one-sided stencil looking towards smaller `ν`.
    Backward,
}

/// `da/dν` by finite differences of tongue points.
///
/// Central differences are used when `ν + h` stays inside homeomorphisms,
/// otherwise the second-order backward stencil `(3a(ν) - 4a(ν-h) + a(ν-2h)) / 2h`.
pub fn fd_derivative(
    family: &MonotoneFamily,
    alpha: &ContinuedFraction,
    nu: f64,
    h: f64,
    tol_a: f64,
) -> Result<(f64, Stencil)> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let a_at = |x: f64| solve_tongue_point(family, alpha, x, tol_a).map(|s| s.a);
    if family.is_homeomorphism(nu + h)? {
        let (plus, minus) = rayon::join(|| a_at(nu + h), || a_at(nu - h));
        Ok(((plus? - minus?) / (2.0 * h), Stencil::Central))
    } else {
        let vals: Vec<f64> = [nu, nu - h, nu - 2.0 * h]
            .par_iter()
            .map(|&x| a_at(x))
            .collect::<Result<_>>()?;
        Ok(((3.0 * vals[0] - 4.0 * vals[1] + vals[2]) / (2.0 * h), Stencil::Backward))
    }
}

/// Settings for [`trace_tongue`].
#[derive(Debug, Clone, PartialEq)]
pub struct TongueOptions {
    pub tol_a: f64,
    pub bins: usize,
    pub solve: SolveOptions,
    /// Step of the finite-difference cross-check; `None` skips it.
    pub fd_step: Option<f64>,
}

impl Default for TongueOptions {
    fn default() -> Self {
        Self { tol_a: DEFAULT_TOL_A, bins: DEFAULT_BINS, solve: SolveOptions::default(), fd_step: None }
    }
}

/// One traced point of a tongue with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TonguePoint {
    pub nu: f64,
    pub a: f64,
    pub derivative: f64,
    pub fd_derivative: Option<f64>,
    pub width: f64,
    pub residual: f64,
    pub kr_gap: f64,
    pub lambda: f64,
    pub iterations: usize,
}

/// Tongue point, (−1)-measure and slope at a single `ν`.
pub fn tongue_point(
    family: &MonotoneFamily,
    alpha: &ContinuedFraction,
    nu: f64,
    opts: &TongueOptions,
) -> Result<(TonguePoint, GridMeasure)> {
    let sol = solve_tongue_point(family, alpha, nu, opts.tol_a)?;
    let map = family.map(sol.a, nu)?;
    let init = GridMeasure::lebesgue(opts.bins)?;
    let measure = solve_s_measure(&map, -1.0, opts.bins, &opts.solve, &init)?;
    let derivative = tongue_derivative(family, sol.a, nu, &measure.measure)?;
    let fd = match opts.fd_step {
        Some(h) => Some(fd_derivative(family, alpha, nu, h, opts.tol_a)?.0),
        None => None,
    };
    let point = TonguePoint {
        nu,
        a: sol.a,
        derivative,
        fd_derivative: fd,
        width: sol.width,
        residual: measure.residual,
        kr_gap: measure.kr_gap,
        lambda: measure.lambda,
        iterations: measure.iterations,
    };
    Ok((point, measure.measure))
}

/// Traces the tongue over `nus`; points are independent and computed in parallel.
pub fn trace_tongue(
    family: &MonotoneFamily,
    alpha: &ContinuedFraction,
    nus: &[f64],
    opts: &TongueOptions,
) -> Vec<Result<TonguePoint>> {
    nus.par_iter()
        .map(|&nu| tongue_point(family, alpha, nu, opts).map(|(p, _)| p))
        .collect()
}

/// Result of [`tangent_functional_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangentReport {
    /// `c = ∫ v(f⁻¹x) dμ`.
    pub functional: f64,
    /// `(t, |ρ(f + t v) - α|)` for every requested `t`.
    pub deviations: Vec<(f64, f64)>,
    /// Least-squares slope of `log |ρ(f + tv) - α|` against `log t`.
    pub decay_exponent: Option<f64>,
    /// Richardson-extrapolated two-sided slope of `ρ` along `v`; absent when `c = 0`.
    pub slope_along_v: Option<f64>,
    /// Same along the constant direction.
    pub slope_along_a: Option<f64>,
    /// `slope_along_v / (c · slope_along_a)`.
    pub ratio: Option<f64>,
}

/// Rotation-number precision used by the tangent checks.
const TANGENT_RHO_TOL: f64 = 1e-13;

fn rho_of(map: &AnalyticCircleMap) -> Result<f64> {
    let rn = rotation_number(map, TANGENT_RHO_TOL, 1 << 31)?;
    if !rn.certified {
        return Err(Error::Uncertified { budget: 1 << 31 });
    }
    Ok(rn.estimate)
}

/// Two-sided difference quotient of `ρ` along `v`, Richardson-extrapolated from steps `2t` and `t`.
pub fn directional_rho_slope(map: &AnalyticCircleMap, v: &TrigPolynomial, t: f64) -> Result<f64> {
    let diff = |h: f64| -> Result<f64> {
        let plus = rho_of(&map.perturbed(h, v)?)?;
        let minus = rho_of(&map.perturbed(-h, v)?)?;
        Ok((plus - minus) / (2.0 * h))
    };
    let (d1, d2) = rayon::join(|| diff(t), || diff(2.0 * t));
    Ok((4.0 * d1? - d2?) / 3.0)
}

/// Pairs `v` with the (−1)-measure and probes `ρ` along `v`.
///
/// When the functional vanishes (`|c| ≤ 1e-12`) only the one-sided
/// deviations `|ρ(f + tv) - α|` and their decay exponent are computed.
/// Otherwise the slope of `ρ` along `v` is compared with `c` times the slope
/// along the constant direction. Perturbations that leave the
/// homeomorphisms are reported as errors.
pub fn tangent_functional_check(
    map: &AnalyticCircleMap,
    mu: &GridMeasure,
    v: &TrigPolynomial,
    alpha: f64,
    t_list: &[f64],
) -> Result<TangentReport> {
    if t_list.is_empty() || t_list.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("perturbation sizes must be positive".into()));
    }
    let functional = integrate_pullback(mu, map, |x| v.eval(x))?;
    let deviations: Vec<(f64, f64)> = t_list
        .par_iter()
        .map(|&t| Ok((t, (rho_of(&map.perturbed(t, v)?)? - alpha).abs())))
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = deviations
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(t, d)| (t.ln(), d.ln()))
        .collect();
    let decay_exponent = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    let (slope_along_v, slope_along_a, ratio) = if functional.abs() <= 1e-12 {
        (None, None, None)
    } else {
        let t = t_list.iter().copied().fold(f64::INFINITY, f64::min);
        let (sv, sa) = rayon::join(
            || directional_rho_slope(map, v, t),
            || directional_rho_slope(map, &TrigPolynomial::constant(1.0), t),
        );
        let (sv, sa) = (sv?, sa?);
        (Some(sv), Some(sa), Some(sv / (functional * sa)))
    };
    Ok(TangentReport { functional, deviations, decay_exponent, slope_along_v, slope_along_a, ratio })
}

//! Analytic circle maps given by degree-one trigonometric lifts.
//!
//! A map is stored through its lift
//!
//! > F(x) = x + a + Σₖ (cₖ sin 2πkx + dₖ cos 2πkx),
//!
//! which commutes with integer translations by construction. The Arnold
//! family `x + a + ν sin 2πx` is the case of a single sine coefficient.
//! Everything here is a pure function of the immutable map, so a map can be
//! shared freely between threads.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grid points used to locate extrema of `F'`.
pub const EXTREMUM_GRID: usize = 4096;

/// Default threshold separating diffeomorphisms from critical maps.
pub const DEFAULT_CLASSIFY_DELTA: f64 = 1e-12;

/// Default tolerance for critical point detection.
pub const DEFAULT_CRITICAL_TOL: f64 = 1e-8;

/// Default residual tolerance of [`AnalyticCircleMap::inverse`].
pub const DEFAULT_INVERSE_TOL: f64 = 1e-14;

/// Reduces `x` to `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Length of the shorter arc between two points of the circle.
#[inline]
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = frac(x - y);
    d.min(1.0 - d)
}

/// A trigonometric polynomial `v(x) = constant + Σₖ (sₖ sin 2πkx + cₖ cos 2πkx)`.
///
/// Used for perturbation directions and parameter derivatives of families.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub sine: Vec<f64>,
    #[serde(default)]
    pub cosine: Vec<f64>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Self::default() }
    }

    pub fn sin(k: usize, amplitude: f64) -> Self {
        let mut sine = vec![0.0; k];
        sine[k - 1] = amplitude;
        Self { sine, ..Self::default() }
    }

    pub fn cos(k: usize, amplitude: f64) -> Self {
        let mut cosine = vec![0.0; k];
        cosine[k - 1] = amplitude;
        Self { cosine, ..Self::default() }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: f64, other: &TrigPolynomial) -> Self {
        Self {
            constant: self.constant + t * other.constant,
            sine: add_coeffs(&self.sine, t, &other.sine),
            cosine: add_coeffs(&self.cosine, t, &other.cosine),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.constant + trig_sum(&self.sine, &self.cosine, frac(x), 0)
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite()
            && self.sine.iter().chain(&self.cosine).all(|c| c.is_finite())
    }
}

fn add_coeffs(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + t * b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// `d^m/dx^m Σₖ (sₖ sin 2πkx + cₖ cos 2πkx)` at a reduced point `x`.
fn trig_sum(sine: &[f64], cosine: &[f64], x: f64, m: u32) -> f64 {
    let n = sine.len().max(cosine.len());
    if n == 0 {
        return 0.0;
    }
    let (s1, c1) = (TAU * x).sin_cos();
    let (mut s, mut c) = (s1, c1);
    let mut acc = 0.0;
    for k in 1..=n {
        let sk = sine.get(k - 1).copied().unwrap_or(0.0);
        let ck = cosine.get(k - 1).copied().unwrap_or(0.0);
        // derivatives of sin and cos cycle with period four
        let (ds, dc) = match m % 4 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        let scale = (TAU * k as f64).powi(m as i32);
        acc += scale * (sk * ds + ck * dc);
        let next_s = s * c1 + c * s1;
        c = c * c1 - s * s1;
        s = next_s;
    }
    acc
}

/// Regularity class of a map, decided from the minimum of `F'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapClass {
    Diffeomorphism,
    Multicritical,
    NotHomeomorphism,
}

/// Order of a critical point: the index of the first non-vanishing derivative of `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalOrder {
    Exact(u32),
    /// All derivatives up to the resolved order vanish.
    AtLeast(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: f64,
    pub order: CriticalOrder,
}

/// A point on the lift stored as an integer winding plus a fractional part.
///
/// Long orbits keep full precision in the fractional part this way, while
/// lift differences remain exact in the integer part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftPoint {
    pub winding: i64,
    pub frac: f64,
}

impl LiftPoint {
    pub fn from_real(x: f64) -> Self {
        let w = x.floor();
        let mut p = LiftPoint { winding: w as i64, frac: x - w };
        if p.frac >= 1.0 {
            p.winding += 1;
            p.frac = 0.0;
        }
        p
    }

    /// The lift value as a real number.
    pub fn value(&self) -> f64 {
        self.winding as f64 + self.frac
    }

    /// `self - other` computed without loss from the winding parts.
    pub fn diff(&self, other: &LiftPoint) -> f64 {
        (self.winding - other.winding) as f64 + (self.frac - other.frac)
    }

    /// `self - p` for an integer `p`.
    pub fn minus_int(&self, p: i64) -> f64 {
        (self.winding - p) as f64 + self.frac
    }
}

#[derive(Debug, Clone, Deserialize)]
struct MapRecord {
    offset: f64,
    #[serde(default)]
    sine: Vec<f64>,
    #[serde(default)]
    cosine: Vec<f64>,
}

impl TryFrom<MapRecord> for AnalyticCircleMap {
    type Error = Error;

    fn try_from(r: MapRecord) -> Result<Self> {
        AnalyticCircleMap::new(r.offset, r.sine, r.cosine)
    }
}

/// Orientation-preserving analytic circle map through its degree-one lift.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MapRecord")]
pub struct AnalyticCircleMap {
    offset: f64,
    sine: Vec<f64>,
    cosine: Vec<f64>,
    #[serde(skip)]
    min_slope: OnceLock<(f64, f64)>,
}

impl PartialEq for AnalyticCircleMap {
    fn eq(&self, other: &Self) -> bool {
        self.offset == other.offset && self.sine == other.sine && self.cosine == other.cosine
    }
}

impl AnalyticCircleMap {
    pub fn new(offset: f64, sine: Vec<f64>, cosine: Vec<f64>) -> Result<Self> {
        if !offset.is_finite() || !sine.iter().chain(&cosine).all(|c| c.is_finite()) {
            return Err(Error::InvalidArgument("map coefficients must be finite".into()));
        }
        Ok(Self { offset, sine, cosine, min_slope: OnceLock::new() })
    }

    /// Rigid rotation by `a`.
    pub fn rotation(a: f64) -> Self {
        Self::new(a, Vec::new(), Vec::new()).expect("finite offset")
    }

    /// The Arnold map `x + a + ν sin 2πx`.
    pub fn arnold(a: f64, nu: f64) -> Self {
        Self::new(a, vec![nu], Vec::new()).expect("finite coefficients")
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sine(&self) -> &[f64] {
        &self.sine
    }

    pub fn cosine(&self) -> &[f64] {
        &self.cosine
    }

    /// Upper bound on `|F(x) - x - a|`.
    pub fn amplitude(&self) -> f64 {
        self.sine.iter().chain(&self.cosine).map(|c| c.abs()).sum()
    }

    /// `F + t v` for a trigonometric perturbation `v`.
    pub fn perturbed(&self, t: f64, v: &TrigPolynomial) -> Result<Self> {
        Self::new(
            self.offset + t * v.constant,
            add_coeffs(&self.sine, t, &v.sine),
            add_coeffs(&self.cosine, t, &v.cosine),
        )
    }

    /// Evaluates the lift `F(x)`.
    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        let r = frac(x);
        x + self.offset + trig_sum(&self.sine, &self.cosine, r, 0)
    }

    /// `F(x) - x`, a 1-periodic function.
    #[inline]
    pub fn displacement(&self, x: f64) -> f64 {
        self.offset + trig_sum(&self.sine, &self.cosine, frac(x), 0)
    }

    /// One step of the orbit on the lift.
    #[inline]
    pub fn step(&self, p: LiftPoint) -> LiftPoint {
        let y = p.frac + self.offset + trig_sum(&self.sine, &self.cosine, p.frac, 0);
        let w = y.floor();
        let mut next = LiftPoint { winding: p.winding + w as i64, frac: y - w };
        if next.frac >= 1.0 {
            next.winding += 1;
            next.frac = 0.0;
        }
        next
    }

    /// Derivative of order 1, 2 or 3.
    pub fn derivative(&self, x: f64, order: u32) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "derivative order must be 1, 2 or 3 (got {order})"
            )));
        }
        Ok(self.derivative_of_order(x, order))
    }

    /// Derivative of any order `m >= 1` from termwise differentiation.
    #[inline]
    pub fn derivative_of_order(&self, x: f64, m: u32) -> f64 {
        assert!(m >= 1, "derivative order must be positive");
        let base = if m == 1 { 1.0 } else { 0.0 };
        base + trig_sum(&self.sine, &self.cosine, frac(x), m)
    }

    #[inline]
    pub fn slope(&self, x: f64) -> f64 {
        self.derivative_of_order(x, 1)
    }

    /// Location and value of the global minimum of `F'`.
    ///
    /// Dense grid followed by Newton polish on `F''` around every grid-local minimum.
    pub fn min_derivative(&self) -> (f64, f64) {
        *self.min_slope.get_or_init(|| {
            let minima = self.polished_slope_minima();
            minima
                .into_iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((0.0, 1.0))
        })
    }

    fn polished_slope_minima(&self) -> Vec<(f64, f64)> {
        let n = EXTREMUM_GRID;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = (0..n).map(|i| self.slope(i as f64 * h)).collect();
        if self.sine.iter().chain(&self.cosine).all(|&c| c == 0.0) {
            return vec![(0.0, 1.0)];
        }
        let mut out = Vec::new();
        for i in 0..n {
            let prev = vals[(i + n - 1) % n];
            let next = vals[(i + 1) % n];
            if vals[i] <= prev && vals[i] < next {
                let x = self.polish_slope_minimum(i as f64 * h, h);
                out.push((x, self.slope(x)));
            }
        }
        out
    }

    fn polish_slope_minimum(&self, x0: f64, h: f64) -> f64 {
        let (lo, hi) = (x0 - h, x0 + h);
        let mut x = x0;
        for _ in 0..50 {
            let d2 = self.derivative_of_order(x, 2);
            let d3 = self.derivative_of_order(x, 3);
            if d3 <= 0.0 {
                break;
            }
            let next = (x - d2 / d3).clamp(lo, hi);
            if (next - x).abs() < 1e-16 {
                x = next;
                break;
            }
            x = next;
        }
        if self.slope(x) > self.slope(x0) {
            x0
        } else {
            frac(x)
        }
    }

    pub fn classify(&self, delta: f64) -> MapClass {
        let (_, m) = self.min_derivative();
        if m > delta {
            MapClass::Diffeomorphism
        } else if m < -delta {
            MapClass::NotHomeomorphism
        } else {
            MapClass::Multicritical
        }
    }

    pub fn is_homeomorphism(&self) -> bool {
        self.classify(DEFAULT_CLASSIFY_DELTA) != MapClass::NotHomeomorphism
    }

    pub(crate) fn require_homeomorphism(&self) -> Result<()> {
        if self.is_homeomorphism() {
            Ok(())
        } else {
            Err(Error::NotHomeomorphism { min_derivative: self.min_derivative().1 })
        }
    }

    /// Zeros of `F'` in `[0, 1)` together with their orders.
    pub fn critical_points(&self, tol: f64) -> Result<Vec<CriticalPoint>> {
        let minima = self.polished_slope_minima();
        let mut out: Vec<CriticalPoint> = Vec::new();
        for (x, v) in minima {
            if v < -tol {
                return Err(Error::NotHomeomorphism { min_derivative: v });
            }
            if v > tol {
                continue;
            }
            if out.iter().any(|c| circle_distance(c.location, x) < 1e-9) {
                continue;
            }
            let mut order = CriticalOrder::AtLeast(7);
            for j in 2..=6u32 {
                if self.derivative_of_order(x, j).abs() > tol {
                    if j % 2 == 0 {
                        return Err(Error::AccuracyFault(format!(
                            "critical point at {x} has even order {j}"
                        )));
                    }
                    order = CriticalOrder::Exact(j);
                    break;
                }
            }
            out.push(CriticalPoint { location: x, order });
        }
        out.sort_by(|a, b| a.location.total_cmp(&b.location));
        Ok(out)
    }

    /// The unique real `x` with `F(x) = y`, assuming `F` is non-decreasing.
    ///
    /// Bisection bracket `[y - a - A, y - a + A]` refined by safeguarded Newton.
    pub fn inverse_lift(&self, y: f64) -> Result<f64> {
        let amp = self.amplitude();
        let base = y - self.offset;
        let slack = 1e-12 * (1.0 + base.abs());
        let (mut lo, mut hi) = (base - amp - slack, base + amp + slack);
        if amp == 0.0 {
            return Ok(base);
        }
        let mut x = 0.5 * (lo + hi);
        let mut dx_old = hi - lo;
        let mut dx = dx_old;
        let mut fx = self.lift(x) - y;
        let mut dfx = self.slope(x);
        for _ in 0..400 {
            if fx == 0.0 {
                return Ok(x);
            }
            if fx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let newton_ok = dfx > 0.0 && {
                let xn = x - fx / dfx;
                xn > lo && xn < hi && (2.0 * fx).abs() <= (dx_old * dfx).abs()
            };
            dx_old = dx;
            if newton_ok {
                dx = fx / dfx;
                x -= dx;
            } else {
                dx = 0.5 * (hi - lo);
                x = lo + dx;
            }
            if dx.abs() <= 2.0 * f64::EPSILON * (1.0 + x.abs()) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                return Ok(x);
            }
            fx = self.lift(x) - y;
            dfx = self.slope(x);
        }
        Err(Error::NoConvergence { what: "inverse", iterations: 400 })
    }

    /// Preimage of `y` on the circle, in `[0, 1)`.
    pub fn inverse(&self, y: f64, tol: f64) -> Result<f64> {
        self.require_homeomorphism()?;
        let x = self.inverse_lift(frac(y))?;
        let r = self.lift(x) - frac(y);
        if r.abs() > tol {
            return Err(Error::NoConvergence { what: "inverse", iterations: 400 });
        }
        Ok(frac(x))
    }

    /// `f^n(x)` reduced to `[0, 1)`; negative `n` iterates the inverse.
    pub fn iterate(&self, x: f64, n: i64) -> Result<f64> {
        if n >= 0 {
            let mut p = LiftPoint::from_real(frac(x));
            for _ in 0..n {
                p = self.step(p);
            }
            Ok(p.frac)
        } else {
            self.require_homeomorphism()?;
            let mut y = frac(x);
            for _ in 0..n.unsigned_abs() {
                y = frac(self.inverse_lift(y)?);
            }
            Ok(y)
        }
    }

    /// `F^q(x)` on the lift together with `(F^q)'(x)`.
    pub fn lift_iterate_with_derivative(&self, x: f64, q: usize) -> (LiftPoint, f64) {
        let mut p = LiftPoint::from_real(x);
        let mut d = 1.0;
        for _ in 0..q {
            d *= self.slope(p.frac);
            p = self.step(p);
        }
        (p, d)
    }
}

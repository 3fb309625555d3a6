//! Checks of solved measures that do not go through the operator coefficients.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::circlemap::{frac, AnalyticCircleMap};
use crate::error::{Error, Result};
use crate::measure::grid::GridMeasure;

/// Preimages `f⁻¹(x̄_i)` of the bin midpoints, as lift values.
pub fn midpoint_preimages(map: &AnalyticCircleMap, n: usize) -> Result<Vec<f64>> {
    map.require_homeomorphism()?;
    (0..n)
        .into_par_iter()
        .map(|i| map.inverse_lift((i as f64 + 0.5) / n as f64))
        .collect()
}

/// `(1, sin 2πx, cos 2πx, ..., sin 2πdx, cos 2πdx)` at `x`.
fn trig_basis(x: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    let (s1, c1) = (TAU * x).sin_cos();
    let (mut s, mut c) = (s1, c1);
    for k in 0..degree {
        out[2 * k + 1] = s;
        out[2 * k + 2] = c;
        let ns = s * c1 + c * s1;
        c = c * c1 - s * s1;
        s = ns;
    }
}

/// Largest defect of the identity `∫φ dμ = ∫ (f'∘f⁻¹)^{-s} φ∘f⁻¹ dμ` over trig test functions.
///
/// Both integrals are midpoint sums over the bins; the preimages are computed
/// afresh, so the value is an independent check on any solver.
pub fn invariance_residual(map: &AnalyticCircleMap, s: f64, mu: &GridMeasure, degree: usize) -> Result<f64> {
    let n = mu.len();
    let pre = midpoint_preimages(map, n)?;
    let m = 2 * degree + 1;
    let w = mu.weights();
    let defect = (0..n)
        .into_par_iter()
        .with_min_len(256)
        .fold(
            || (vec![0.0; m], vec![0.0; m], vec![0.0; m]),
            |(mut acc, mut bx, mut by), i| {
                if w[i] > 0.0 {
                    let weight = if s == 0.0 { 1.0 } else { map.slope(pre[i]).max(0.0).powf(-s) };
                    trig_basis(mu.midpoint(i), degree, &mut bx);
                    trig_basis(pre[i], degree, &mut by);
                    for t in 0..m {
                        acc[t] += w[i] * (bx[t] - weight * by[t]);
                    }
                }
                (acc, bx, by)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(
            || vec![0.0; m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(defect.into_iter().map(f64::abs).fold(0.0, f64::max))
}

/// `Σ_i w_i v(f⁻¹(x̄_i))`, the pairing of `v` with the pushforward of `μ` under `f⁻¹`.
pub fn integrate_pullback<V>(mu: &GridMeasure, map: &AnalyticCircleMap, v: V) -> Result<f64>
where
    V: Fn(f64) -> f64 + Sync,
{
    map.require_homeomorphism()?;
    let n = mu.len();
    let w = mu.weights();
    (0..n)
        .into_par_iter()
        .filter(|&i| w[i] > 0.0)
        .map(|i| Ok(w[i] * v(frac(map.inverse_lift(mu.midpoint(i))?))))
        .collect::<Result<Vec<f64>>>()
        .map(|terms| terms.iter().sum())
}

/// Normalized histogram of the orbit `f^k(0)`, `k < n_orbit`.
pub fn birkhoff_invariant_measure(map: &AnalyticCircleMap, n: usize, n_orbit: usize) -> Result<GridMeasure> {
    map.require_homeomorphism()?;
    if n_orbit == 0 {
        return Err(Error::InvalidArgument("orbit length must be positive".into()));
    }
    let mut counts = vec![0u64; n];
    let mut p = crate::circlemap::LiftPoint::from_real(0.0);
    for _ in 0..n_orbit {
        counts[((p.frac * n as f64) as usize).min(n - 1)] += 1;
        p = map.step(p);
    }
    GridMeasure::normalized(counts.into_iter().map(|c| c as f64).collect())
}

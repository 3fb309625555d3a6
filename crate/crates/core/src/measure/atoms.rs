//! Atoms under the defining relation of s-measures.
//!
//! Testing the relation against the indicator of a point gives
//! `μ({p}) = μ({f(p)}) f'(p)^{-s}`, so an atom spreads along the whole orbit
//! with masses `((f^k)'(p))^s μ({p})`. For `s < 0` these masses do not sum
//! to a finite total, which is why s-measures have no atoms.

use crate::circlemap::{frac, AnalyticCircleMap, LiftPoint, DEFAULT_INVERSE_TOL};
use crate::error::Result;

/// One application of the defining sum to a purely atomic measure.
///
/// Each atom `(x, m)` moves to `f⁻¹(x)` with mass `m (f'(f⁻¹(x)))^{-s}`.
pub fn pullback_atoms(map: &AnalyticCircleMap, s: f64, atoms: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    atoms
        .iter()
        .map(|&(x, m)| {
            let y = map.inverse(x, DEFAULT_INVERSE_TOL)?;
            Ok((y, m * map.slope(y).powf(-s)))
        })
        .collect()
}

/// Defect of `μ({p}) = μ({f(p)}) f'(p)^{-s}` for a unit atom placed at `f(p)`.
///
/// Returns `(location error, mass error)` of the pulled-back atom.
pub fn atom_identity_defect(map: &AnalyticCircleMap, s: f64, p: f64) -> Result<(f64, f64)> {
    let image = frac(map.lift(p));
    let out = pullback_atoms(map, s, &[(image, 1.0)])?;
    let (y, m) = out[0];
    let expect = map.slope(p).powf(-s);
    Ok((crate::circlemap::circle_distance(y, p), (m - expect).abs()))
}

/// Partial sums `S_K = Σ_{k ≤ K} ((f^k)'(p))^s` for `K = 0..=k_max`.
pub fn atom_series_partial_sums(map: &AnalyticCircleMap, s: f64, p: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut pt = LiftPoint::from_real(p);
    let mut log_derivative = 0.0;
    let mut sum = 0.0;
    for _ in 0..=k_max {
        sum += (s * log_derivative).exp();
        out.push(sum);
        log_derivative += map.slope(pt.frac).ln();
        pt = map.step(pt);
    }
    out
}

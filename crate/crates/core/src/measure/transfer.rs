//! Exponent-weighted transfer operators on grid measures.
//!
//! The circle is cut at the bin edges `k/N` and at their preimages
//! `g_j = F⁻¹(j/N)`. Every resulting piece `[y₀, y₁]` lies in a single
//! source bin `k` and maps into a single image bin `j`, so mass moves
//! between bins with exact overlap fractions.
//!
//! * `s ≥ 0`: mass of bin `k` is pushed forward with weight `f'(y)^s`,
//!   the share of the piece being `N (y₁ - y₀)`.
//! * `s < 0`: mass of bin `j` is pulled back to bin `k` with weight
//!   `f'(y)^{-s}`, the share of the piece being `N (F(y₁) - F(y₀))`.
//!
//! Both weights stay bounded at critical points. The derivative is evaluated
//! at the piece midpoint rather than at the bin midpoint.

use rayon::prelude::*;

use crate::circlemap::AnalyticCircleMap;
use crate::error::{Error, Result};
use crate::measure::grid::GridMeasure;

/// Which of the two operator forms is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Forward,
    Pullback,
}

/// Sparse nonnegative operator in compressed rows: row = target bin, column = source bin.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    map: AnalyticCircleMap,
    s: f64,
    n: usize,
    branch: Branch,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// A piece between consecutive cut points.
#[derive(Debug, Clone, Copy)]
struct Piece {
    source_bin: usize,
    image_bin: usize,
    length: f64,
    image_length: f64,
    mid: f64,
}

/// Cut pieces lying over image bin `j`, i.e. between `g_j` and `g_{j+1}`.
fn pieces_over(map: &AnalyticCircleMap, n: usize, j: usize, g0: f64, g1: f64) -> Vec<Piece> {
    let nf = n as f64;
    let mut cuts: Vec<(f64, f64)> = vec![(g0, j as f64 / nf)];
    let first = (g0 * nf).floor() as i64 + 1;
    let last = (g1 * nf).ceil() as i64 - 1;
    for m in first..=last {
        let y = m as f64 / nf;
        cuts.push((y, map.lift(y)));
    }
    cuts.push((g1, (j + 1) as f64 / nf));
    cuts.windows(2)
        .map(|w| {
            let (y0, fy0) = w[0];
            let (y1, fy1) = w[1];
            let k = (y0 * nf).floor() as i64;
            Piece {
                source_bin: k.rem_euclid(n as i64) as usize,
                image_bin: j,
                length: y1 - y0,
                image_length: (fy1 - fy0).max(0.0),
                mid: 0.5 * (y0 + y1),
            }
        })
        .filter(|p| p.length > 0.0 || p.image_length > 0.0)
        .collect()
}

impl TransferOperator {
    /// Assembles the operator for exponent `s` on `n` bins.
    pub fn build(map: &AnalyticCircleMap, s: f64, n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("bin count must be a power of two >= 2 (got {n})")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidArgument("exponent must be finite".into()));
        }
        map.require_homeomorphism()?;
        let nf = n as f64;
        let g: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| map.inverse_lift(j as f64 / nf))
            .collect::<Result<_>>()?;
        let branch = if s >= 0.0 { Branch::Forward } else { Branch::Pullback };
        let per_bin: Vec<Vec<(u32, u32, f64)>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let g1 = if j + 1 < n { g[j + 1] } else { g[0] + 1.0 };
                pieces_over(map, n, j, g[j], g1)
                    .into_iter()
                    .filter_map(|p| {
                        let slope = map.slope(p.mid).max(0.0);
                        let entry = match branch {
                            Branch::Forward => {
                                let c = nf * p.length * weight(slope, s);
                                (p.image_bin as u32, p.source_bin as u32, c)
                            }
                            Branch::Pullback => {
                                let c = nf * p.image_length * weight(slope, -s);
                                (p.source_bin as u32, p.image_bin as u32, c)
                            }
                        };
                        (entry.2 > 0.0).then_some(entry)
                    })
                    .collect()
            })
            .collect();
        let mut entries: Vec<(u32, u32, f64)> = per_bin.into_iter().flatten().collect();
        entries.par_sort_unstable_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut prev: Option<(u32, u32)> = None;
        for (r, c, v) in entries {
            if prev == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
                continue;
            }
            prev = Some((r, c));
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { map: map.clone(), s, n, branch, row_ptr, cols, vals })
    }

    pub fn map(&self) -> &AnalyticCircleMap {
        &self.map
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn bins(&self) -> usize {
        self.n
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries `(target, source, coefficient)` in row order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |e| (r, self.cols[e] as usize, self.vals[e]))
        })
    }

    /// Total outgoing coefficient of every source bin.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (c, v) in self.cols.iter().zip(&self.vals) {
            out[*c as usize] += v;
        }
        out
    }

    /// Total incoming coefficient of every target bin.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    /// `out = T w` on raw weight vectors.
    pub fn apply_raw(&self, w: &[f64], out: &mut [f64]) {
        assert_eq!(w.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(r, o)| {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            *o = self.cols[range.clone()]
                .iter()
                .zip(&self.vals[range])
                .map(|(c, v)| v * w[*c as usize])
                .sum();
        });
    }

    /// Normalized image of `mu` and its mass `λ` before normalization.
    pub fn apply(&self, mu: &GridMeasure) -> Result<(GridMeasure, f64)> {
        if mu.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "measure has {} bins, operator has {}",
                mu.len(),
                self.n
            )));
        }
        let mut out = vec![0.0; self.n];
        self.apply_raw(mu.weights(), &mut out);
        let lambda: f64 = out.iter().sum();
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument("image has zero total mass".into()));
        }
        Ok((GridMeasure::normalized(out)?, lambda))
    }

    /// Compressed-row arrays `(row_ptr, cols, vals)`.
    pub fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }
}

#[inline]
fn weight(slope: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else {
        slope.powf(exponent)
    }
}

/// Shorthand for [`TransferOperator::build`].
pub fn build_transfer(map: &AnalyticCircleMap, s: f64, n: usize) -> Result<TransferOperator> {
    TransferOperator::build(map, s, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn zero_exponent_conserves_mass() {
        let f = AnalyticCircleMap::arnold(0.3, 0.9 / TAU);
        let op = build_transfer(&f, 0.0, 256).unwrap();
        for c in op.column_sums() {
            assert!((c - 1.0).abs() < 1e-12);
        }
        let (_, lambda) = op.apply(&GridMeasure::dirac(0.37, 256).unwrap()).unwrap();
        assert!((lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_a_shift() {
        for s in [-2.0, -1.0, 0.5, 1.0] {
            let op = build_transfer(&AnalyticCircleMap::rotation(golden()), s, 128).unwrap();
            for c in op.column_sums().into_iter().chain(op.row_sums()) {
                assert!((c - 1.0).abs() < 1e-12);
            }
            let leb = GridMeasure::lebesgue(128).unwrap();
            let (img, lambda) = op.apply(&leb).unwrap();
            assert!((lambda - 1.0).abs() < 1e-12);
            assert!(crate::measure::kr_distance(&img, &leb).unwrap() < 1e-14);
        }
    }

    #[test]
    fn coefficients_vanish_at_critical_value() {
        let n = 1024;
        let f = AnalyticCircleMap::arnold(0.2, 1.0 / TAU);
        let op = build_transfer(&f, -1.0, n).unwrap();
        let c = f.lift(0.5);
        let bin = ((c - c.floor()) * n as f64) as usize;
        // the weight f' at the preimage of the critical value is zero, so the
        // column of that source bin is the lightest and far below average
        let cols = op.column_sums();
        let lightest = (0..n).min_by(|&a, &b| cols[a].total_cmp(&cols[b])).unwrap();
        assert!((lightest as i64 - bin as i64).abs() <= 1, "lightest {lightest}, critical {bin}");
        assert!(cols[bin] < 0.05, "column sum {}", cols[bin]);
        assert!(op.entries().all(|(_, _, v)| v >= 0.0));
    }

    #[test]
    fn first_application_changes_mass() {
        let f = AnalyticCircleMap::arnold(0.6, 0.5 / TAU);
        let op = build_transfer(&f, -1.0, 512).unwrap();
        let (_, lambda) = op.apply(&GridMeasure::lebesgue(512).unwrap()).unwrap();
        assert!((lambda - 1.0).abs() > 1e-6);
    }

    #[test]
    fn rejects_non_homeomorphism() {
        let f = AnalyticCircleMap::arnold(0.3, 2.0 / TAU);
        assert!(build_transfer(&f, -1.0, 64).is_err());
    }
}

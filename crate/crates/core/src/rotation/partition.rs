//! Dynamical partitions built from closest-return intervals.

use std::io::Write;

use serde::Serialize;

use crate::circlemap::AnalyticCircleMap;
use crate::error::{Error, Result};
use crate::rotation::number::{base_point, ladder, orbit_from};

/// Tolerance on the covering and abutment checks.
const COVER_TOL: f64 = 1e-9;

/// One interval `I_m^k = f^k(I_m)` of a dynamical partition, `m ∈ {n, n + 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionInterval {
    /// Level `m` of the generating interval `I_m`.
    pub level: usize,
    /// Iterate index `k`.
    pub index: usize,
    /// Left endpoint in `[0, 1)`.
    pub left: f64,
    /// Right endpoint, `left + length`; may exceed 1 for the interval containing 0.
    pub right: f64,
    pub length: f64,
}

/// The level-`n` partition: `q_{n+1}` intervals `I_n^k` and `q_n` intervals `I_{n+1}^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicalPartition {
    pub level: usize,
    pub q_n: i64,
    pub q_next: i64,
    /// Intervals in circular order starting from the one with the smallest left endpoint.
    pub intervals: Vec<PartitionInterval>,
}

impl DynamicalPartition {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|i| i.length).sum()
    }

    /// Writes `level,index,left,right,length` rows after optional `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "level,index,left,right,length")?;
        for i in &self.intervals {
            writeln!(w, "{},{},{},{},{}", i.level, i.index, i.left, i.right, i.length)?;
        }
        Ok(())
    }
}

/// Builds the dynamical partition of level `n` from [`base_point`] and checks that it tiles the circle.
pub fn build_partition(map: &AnalyticCircleMap, n: usize) -> Result<DynamicalPartition> {
    build_partition_at(map, base_point(map)?, n)
}

/// [`build_partition`] generated by the orbit of `x0`.
pub fn build_partition_at(map: &AnalyticCircleMap, x0: f64, n: usize) -> Result<DynamicalPartition> {
    let cv = ladder(map, n + 2)?;
    let (p_n, q_n) = cv[n];
    let (p_next, q_next) = cv[n + 1];
    if q_n == q_next {
        return Err(Error::InvalidArgument(format!(
            "level {n} repeats the return time {q_n}; use level {}",
            n + 1
        )));
    }
    let orbit = orbit_from(map, x0, (q_n + q_next) as usize);
    let mut intervals = Vec::with_capacity((q_n + q_next) as usize);
    for (level, p, q, count) in [(n, p_n, q_n, q_next), (n + 1, p_next, q_next, q_n)] {
        let q = q as usize;
        for k in 0..count as usize {
            let signed = orbit[k + q].diff(&orbit[k]) - p as f64;
            let left = if signed >= 0.0 { orbit[k].frac } else { orbit[k + q].frac };
            let length = signed.abs();
            intervals.push(PartitionInterval { level, index: k, left, right: left + length, length });
        }
    }
    intervals.sort_by(|a, b| a.left.total_cmp(&b.left));

    // Lengths come from gaps between consecutive left endpoints so the tiling sums
    // to one up to rounding; each gap must match its dynamical length.
    let m = intervals.len();
    for i in 0..m {
        let next_left = if i + 1 == m { intervals[0].left + 1.0 } else { intervals[i + 1].left };
        let cur = &mut intervals[i];
        if (next_left - cur.right).abs() > COVER_TOL {
            return Err(Error::AccuracyFault(format!(
                "interval at {} does not abut its neighbour at {}",
                cur.left,
                next_left.fract()
            )));
        }
        cur.right = next_left;
        cur.length = next_left - cur.left;
    }

    let accumulated = (q_n + q_next) as f64 * 1e-15;
    let shortest = intervals.iter().map(|i| i.length).fold(f64::INFINITY, f64::min);
    if shortest <= accumulated {
        return Err(Error::AccuracyFault(format!(
            "shortest interval {shortest:e} is below the orbit error estimate {accumulated:e}"
        )));
    }
    let part = DynamicalPartition { level: n, q_n, q_next, intervals };
    let total = part.total_length();
    if (total - 1.0).abs() > COVER_TOL {
        return Err(Error::AccuracyFault(format!("partition lengths sum to {total}")));
    }
    // I_n = [x0, f^{q_n}(x0)] must not contain earlier iterates of x0
    let signed = orbit[q_n as usize].diff(&orbit[0]) - p_n as f64;
    for j in 1..q_n as usize {
        let x = (orbit[j].frac - x0).rem_euclid(1.0);
        let depth = if signed >= 0.0 { x } else { 1.0 - x };
        if depth > COVER_TOL && depth < signed.abs() - COVER_TOL {
            return Err(Error::AccuracyFault(format!(
                "iterate {j} lies inside the closest-return interval"
            )));
        }
    }
    Ok(part)
}

/// Largest ratio of lengths of two neighbouring intervals (circularly).
pub fn real_bounds_ratio(partition: &DynamicalPartition) -> f64 {
    let iv = &partition.intervals;
    let m = iv.len();
    if m < 2 {
        return 1.0;
    }
    (0..m)
        .map(|i| {
            let (a, b) = (iv[i].length, iv[(i + 1) % m].length);
            a.max(b) / a.min(b)
        })
        .fold(1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn golden_counts() {
        let f = AnalyticCircleMap::rotation(golden());
        let p2 = build_partition(&f, 2).unwrap();
        assert_eq!(p2.len(), 5);
        assert_eq!(p2.intervals.iter().filter(|i| i.level == 2).count(), 3);
        let p4 = build_partition(&f, 4).unwrap();
        assert_eq!(p4.len(), 13);
        assert!((p4.total_length() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn three_distance_lengths() {
        let a = golden();
        let f = AnalyticCircleMap::rotation(a);
        let part = build_partition(&f, 4).unwrap();
        // |q_n α - p_n| for 3/5 and 5/8
        let long = (5.0 * a - 3.0).abs();
        let short = (8.0 * a - 5.0).abs();
        for iv in &part.intervals {
            let expect = if iv.level == 4 { long } else { short };
            assert!((iv.length - expect).abs() < 1e-13);
        }
        // direct orbit sort oracle
        let mut pts: Vec<f64> = (0..13).map(|k| (k as f64 * a).fract()).collect();
        pts.sort_by(f64::total_cmp);
        for (iv, x) in part.intervals.iter().zip(&pts) {
            assert!((iv.left - x).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_real_bounds_is_golden_ratio() {
        let f = AnalyticCircleMap::rotation(golden());
        for n in 3..10 {
            let r = real_bounds_ratio(&build_partition(&f, n).unwrap());
            assert!((r - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9, "n = {n}: {r}");
        }
    }

    #[test]
    fn equal_intervals_ratio_one() {
        let iv = |k: usize| PartitionInterval {
            level: 0,
            index: k,
            left: k as f64 / 4.0,
            right: (k + 1) as f64 / 4.0,
            length: 0.25,
        };
        let part = DynamicalPartition { level: 0, q_n: 1, q_next: 1, intervals: (0..4).map(iv).collect() };
        assert_eq!(real_bounds_ratio(&part), 1.0);
    }

    #[test]
    fn csv_has_one_row_per_interval() {
        let part = build_partition(&AnalyticCircleMap::rotation(golden()), 3).unwrap();
        let mut buf = Vec::new();
        part.write_csv(&mut buf, &["config_sha256=abc".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# config_sha256=abc\nlevel,index,left,right,length\n"));
        assert_eq!(text.lines().count(), 2 + part.len());
    }
}

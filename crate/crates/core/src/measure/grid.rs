//! Probability measures on the circle stored as bin weights.

use std::io::{BufRead, Read, Write};

use crate::circlemap::frac;
use crate::error::{Error, Result};

/// Magic bytes of the binary measure dump.
pub const AMU1_MAGIC: &[u8; 4] = b"AMU1";

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;

/// A probability measure on `N` equal bins, bin `i` covering `[i/N, (i+1)/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    weights: Vec<f64>,
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("bin count must be a power of two >= 2 (got {n})")));
    }
    Ok(())
}

impl GridMeasure {
    /// Wraps weights that are already nonnegative and sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        check_size(weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Normalizes nonnegative weights to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        check_size(weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("measure has zero total mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    pub fn lebesgue(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self { weights: vec![1.0 / n as f64; n] })
    }

    /// Unit mass in the bin containing `x`.
    pub fn dirac(x: f64, n: usize) -> Result<Self> {
        check_size(n)?;
        let mut weights = vec![0.0; n];
        let i = ((frac(x) * n as f64) as usize).min(n - 1);
        weights[i] = 1.0;
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Midpoint of bin `i`.
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.len() as f64
    }

    pub fn max_atom(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Splits every bin evenly into `factor` sub-bins.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        check_size(self.len() * factor)?;
        let weights = self
            .weights
            .iter()
            .flat_map(|&w| std::iter::repeat(w / factor as f64).take(factor))
            .collect();
        Ok(Self { weights })
    }

    /// Writes `bin,left,weight` rows after optional `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "bin,left,weight")?;
        let n = self.len() as f64;
        for (i, x) in self.weights.iter().enumerate() {
            writeln!(w, "{i},{},{x}", i as f64 / n)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut weights = Vec::new();
        let mut seen_header = false;
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_header {
                if line != "bin,left,weight" {
                    return Err(Error::Format(format!("unexpected header {line:?}")));
                }
                seen_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Format(format!("expected 3 columns in {line:?}")));
            }
            let bin: usize = cols[0].parse().map_err(|_| Error::Format(format!("bad bin in {line:?}")))?;
            if bin != weights.len() {
                return Err(Error::Format(format!("bins out of order at {bin}")));
            }
            let w: f64 = cols[2].parse().map_err(|_| Error::Format(format!("bad weight in {line:?}")))?;
            weights.push(w);
        }
        Self::from_weights(weights)
    }

    /// Binary dump: `AMU1`, little-endian `u32` bin count, then the `f64` weights.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = u32::try_from(self.len())
            .map_err(|_| Error::InvalidArgument("too many bins for the binary format".into()))?;
        w.write_all(AMU1_MAGIC)?;
        w.write_all(&n.to_le_bytes())?;
        for x in &self.weights {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != AMU1_MAGIC {
            return Err(Error::Format("missing AMU1 magic".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let n = u32::from_le_bytes(len) as usize;
        check_size(n)?;
        let mut buf = vec![0u8; 8 * n];
        r.read_exact(&mut buf)?;
        let weights = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_weights(weights)
    }
}

/// Circular Wasserstein-1 distance between two grid measures.
///
/// With `C_i` the cumulative difference of weights through bin `i`, the
/// distance is `min_t (1/N) Σ |C_i - t|`, attained at a median of the `C_i`.
/// Measures on different grids are compared after splitting the coarser bins.
pub fn kr_distance(mu: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    let (n, m) = (mu.len(), nu.len());
    if n != m {
        return if n < m {
            kr_distance(&mu.refine(m / n)?, nu)
        } else {
            kr_distance(mu, &nu.refine(n / m)?)
        };
    }
    Ok(kr_distance_weights(mu.weights(), nu.weights()))
}

/// [`kr_distance`] on raw weight vectors of equal length.
pub fn kr_distance_weights(mu: &[f64], nu: &[f64]) -> f64 {
    assert_eq!(mu.len(), nu.len());
    let n = mu.len();
    let mut acc = 0.0;
    let mut c: Vec<f64> = mu
        .iter()
        .zip(nu)
        .map(|(a, b)| {
            acc += a - b;
            acc
        })
        .collect();
    let mut sorted = c.clone();
    let (_, &mut median, _) = sorted.select_nth_unstable_by(n / 2, f64::total_cmp);
    c.iter_mut().for_each(|x| *x = (*x - median).abs());
    c.iter().sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initializers() {
        assert_eq!(GridMeasure::lebesgue(4).unwrap().weights(), &[0.25; 4]);
        assert_eq!(GridMeasure::dirac(0.5, 4).unwrap().weights(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(GridMeasure::dirac(0.0, 64).unwrap().weights()[0], 1.0);
        assert!(GridMeasure::lebesgue(1).is_err());
        assert!(GridMeasure::lebesgue(12).is_err());
    }

    #[test]
    fn kr_examples() {
        let n = 16;
        let d0 = GridMeasure::dirac(0.0, n).unwrap();
        assert_eq!(kr_distance(&d0, &d0).unwrap(), 0.0);
        assert!((kr_distance(&d0, &GridMeasure::dirac(0.5, n).unwrap()).unwrap() - 0.5).abs() < 1e-15);
        assert!((kr_distance(&d0, &GridMeasure::dirac(0.75, n).unwrap()).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kr_across_resolutions() {
        let a = GridMeasure::lebesgue(8).unwrap();
        let b = GridMeasure::lebesgue(64).unwrap();
        assert!(kr_distance(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn max_atom_examples() {
        assert_eq!(GridMeasure::lebesgue(32).unwrap().max_atom(), 1.0 / 32.0);
        assert_eq!(GridMeasure::dirac(0.3, 32).unwrap().max_atom(), 1.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mu = GridMeasure::normalized((0..16).map(|i| 1.0 + (i as f64).sin().abs() / 3.0).collect()).unwrap();
        let mut buf = Vec::new();
        mu.write_csv(&mut buf, &["config_sha256=00".into()]).unwrap();
        assert_eq!(GridMeasure::read_csv(buf.as_slice()).unwrap(), mu);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let mu = GridMeasure::normalized((0..32).map(|i| (i as f64 * 0.37).cos() + 1.5).collect()).unwrap();
        let mut buf = Vec::new();
        mu.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"AMU1");
        assert_eq!(buf.len(), 8 + 8 * 32);
        assert_eq!(GridMeasure::read_binary(buf.as_slice()).unwrap(), mu);
        buf[0] = b'X';
        assert!(GridMeasure::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(GridMeasure::from_weights(vec![0.5, 0.6]).is_err());
        assert!(GridMeasure::from_weights(vec![1.5, -0.5]).is_err());
        assert!(GridMeasure::normalized(vec![0.0, 0.0]).is_err());
    }
}

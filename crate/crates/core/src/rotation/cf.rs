//! Continued fraction expansions and their convergent ladders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold below which the Gauss map remainder is treated as zero.
const RATIONAL_EPS: f64 = 1e-15;

/// Partial quotients `[k_0; k_1, k_2, ...]` of a real number.
///
/// `finite` records that the expansion terminated because the number is rational
/// (within floating tolerance); `quotients.len()` is then its length ℓ(α).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    quotients: Vec<u64>,
    finite: bool,
}

impl ContinuedFraction {
    /// Builds an expansion from explicit quotients; `k_i >= 1` is required for `i >= 1`.
    pub fn from_quotients(quotients: Vec<u64>) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::InvalidArgument("quotient list is empty".into()));
        }
        if quotients.iter().skip(1).any(|&k| k == 0) {
            return Err(Error::InvalidArgument(
                "partial quotients after the first must be at least 1".into(),
            ));
        }
        Ok(Self { quotients, finite: false })
    }

    /// Expansion of an exact rational `p/q`, `q >= 1`, by the Euclidean algorithm.
    pub fn of_rational(p: i64, q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidArgument(format!("denominator must be positive (got {q})")));
        }
        let (mut a, mut b) = (p, q);
        let mut quotients = Vec::new();
        while b != 0 {
            let k = a.div_euclid(b);
            quotients.push(k as u64);
            (a, b) = (b, a - k * b);
        }
        if p < 0 {
            return Err(Error::InvalidArgument("negative rationals are not supported".into()));
        }
        Ok(Self { quotients, finite: true })
    }

    /// `[0; 1, 1, 1, ...]` with `depth` quotients.
    pub fn golden(depth: usize) -> Self {
        let mut quotients = vec![1; depth.max(1)];
        quotients[0] = 0;
        Self { quotients, finite: false }
    }

    /// `[0; 2, 2, 2, ...]` with `depth` quotients.
    pub fn silver(depth: usize) -> Self {
        let mut quotients = vec![2; depth.max(1)];
        quotients[0] = 0;
        Self { quotients, finite: false }
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    /// Convergents `p_n/q_n = [k_0; k_1, ..., k_n]`, one per quotient.
    ///
    /// Stops early if the next convergent would overflow `i64`.
    pub fn convergents(&self) -> Vec<(i64, i64)> {
        let (mut p0, mut q0) = (1i64, 0i64);
        let (mut p1, mut q1) = (self.quotients[0] as i64, 1i64);
        let mut out = vec![(p1, q1)];
        for &k in &self.quotients[1..] {
            let k = k as i64;
            let next = k
                .checked_mul(p1)
                .and_then(|v| v.checked_add(p0))
                .zip(k.checked_mul(q1).and_then(|v| v.checked_add(q0)));
            let Some((p2, q2)) = next else { break };
            out.push((p2, q2));
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
        }
        out
    }

    /// Value of the truncated expansion.
    pub fn value(&self) -> f64 {
        let &(p, q) = self.convergents().last().expect("non-empty ladder");
        p as f64 / q as f64
    }

    /// Distinct convergent denominators, the closest return times of a rotation by this number.
    pub fn return_times(&self) -> Vec<i64> {
        let mut out: Vec<i64> = Vec::new();
        for (_, q) in self.convergents() {
            if out.last() != Some(&q) {
                out.push(q);
            }
        }
        out
    }
}

/// Expands `alpha` with the Gauss map, keeping at most `depth` quotients.
pub fn expand(alpha: f64, depth: usize) -> Result<ContinuedFraction> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument("cannot expand a non-finite number".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let k0 = alpha.floor();
    let mut quotients = vec![k0 as u64];
    let mut x = alpha - k0;
    let mut finite = false;
    while quotients.len() < depth {
        if x < RATIONAL_EPS {
            finite = true;
            break;
        }
        let y = 1.0 / x;
        let mut k = y.floor();
        let mut r = y - k;
        // 1/x can land a hair below an integer for rational inputs
        if 1.0 - r < RATIONAL_EPS * y {
            k += 1.0;
            r = 0.0;
        }
        quotients.push(k as u64);
        x = r;
    }
    if !finite && x < RATIONAL_EPS {
        finite = true;
    }
    if alpha < 0.0 {
        return Err(Error::InvalidArgument("negative numbers are not supported".into()));
    }
    Ok(ContinuedFraction { quotients, finite })
}

//! Experiment configuration read from a TOML file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

use smeasure::measure::SolveOptions;
use smeasure::rotation::{DEFAULT_ROTATION_BUDGET, DEFAULT_ROTATION_TOL};
use smeasure::tongue::{TongueOptions, DEFAULT_TOL_A};
use smeasure::{AnalyticCircleMap, ContinuedFraction, MonotoneFamily, TrigPolynomial};

/// Depth used when a periodic tail is expanded.
const DEFAULT_ALPHA_DEPTH: usize = 80;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub offset: f64,
    #[serde(default)]
    pub sine: Vec<f64>,
    #[serde(default)]
    pub cosine: Vec<f64>,
}

/// `x + a + P(x) + ν D(x)`; the default `P = 0`, `D = sin 2πx` is the Arnold family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// Fixed parameter; when absent it is solved from `alpha` at each `ν`.
    pub a: Option<f64>,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub base_sine: Vec<f64>,
    #[serde(default)]
    pub base_cosine: Vec<f64>,
    #[serde(default = "default_direction")]
    pub direction_sine: Vec<f64>,
    #[serde(default)]
    pub direction_cosine: Vec<f64>,
}

fn default_direction() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSpec {
    pub quotients: Vec<u64>,
    /// How many trailing quotients repeat; 0 keeps the list as given.
    #[serde(default)]
    pub period: usize,
    #[serde(default = "default_alpha_depth")]
    pub depth: usize,
}

fn default_alpha_depth() -> usize {
    DEFAULT_ALPHA_DEPTH
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "d_tol_kr")]
    pub kr: f64,
    #[serde(default = "d_tol_a")]
    pub a: f64,
    #[serde(default = "d_tol_rot")]
    pub rotation: f64,
    #[serde(default = "d_budget")]
    pub rotation_budget: usize,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
}

fn d_tol_kr() -> f64 {
    1e-9
}
fn d_tol_a() -> f64 {
    DEFAULT_TOL_A
}
fn d_tol_rot() -> f64 {
    DEFAULT_ROTATION_TOL
}
fn d_budget() -> usize {
    DEFAULT_ROTATION_BUDGET
}
fn d_max_iter() -> usize {
    100_000
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { kr: d_tol_kr(), a: d_tol_a(), rotation: d_tol_rot(), rotation_budget: d_budget(), max_iter: d_max_iter() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: Option<MapSpec>,
    pub family: Option<FamilySpec>,
    pub alpha: Option<AlphaSpec>,
    #[serde(default = "d_exponents")]
    pub exponents: Vec<f64>,
    #[serde(default = "d_bins")]
    pub bins: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Starting measure for the solver: a Dirac bin at this point, Lebesgue when absent.
    pub init_dirac: Option<f64>,
    #[serde(default = "d_levels")]
    pub levels: usize,
    #[serde(default)]
    pub nu_grid: Vec<f64>,
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub measures: Vec<PathBuf>,
    pub baselines: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn d_exponents() -> Vec<f64> {
    vec![-1.0]
}
fn d_bins() -> usize {
    4096
}
fn d_levels() -> usize {
    10
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("kr", t.kr), ("a", t.a), ("rotation", t.rotation)] {
            anyhow::ensure!(v > 0.0 && v.is_finite(), "tolerance {name} must be positive (got {v})");
        }
        anyhow::ensure!(t.rotation_budget > 0 && t.max_iter > 0, "budgets must be positive");
        anyhow::ensure!(self.bins >= 2 && self.bins.is_power_of_two(), "bins must be a power of two (got {})", self.bins);
        anyhow::ensure!(self.exponents.iter().all(|s| s.is_finite()), "exponents must be finite");
        anyhow::ensure!(self.nu_grid.iter().all(|s| s.is_finite()), "nu grid must be finite");
        anyhow::ensure!(!(self.map.is_some() && self.family.is_some()), "give either [map] or [family], not both");
        if let Some(h) = self.fd_step {
            anyhow::ensure!(h > 0.0, "fd_step must be positive");
        }
        if let Some(a) = &self.alpha {
            anyhow::ensure!(a.period <= a.quotients.len(), "alpha period longer than the quotient list");
            self.alpha_cf()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, so equivalent files share a digest.
    pub fn digest(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn alpha_cf(&self) -> anyhow::Result<ContinuedFraction> {
        let spec = self.alpha.as_ref().ok_or_else(|| anyhow::anyhow!("config needs [alpha] quotients"))?;
        let mut q = spec.quotients.clone();
        if spec.period > 0 {
            let tail = q[q.len() - spec.period..].to_vec();
            while q.len() < spec.depth {
                q.push(tail[(q.len() - spec.quotients.len()) % spec.period]);
            }
        }
        Ok(ContinuedFraction::from_quotients(q)?)
    }

    pub fn family(&self) -> anyhow::Result<MonotoneFamily> {
        let f = self.family.as_ref().ok_or_else(|| anyhow::anyhow!("config needs [family]"))?;
        let base = TrigPolynomial { constant: 0.0, sine: f.base_sine.clone(), cosine: f.base_cosine.clone() };
        let dir = TrigPolynomial { constant: 0.0, sine: f.direction_sine.clone(), cosine: f.direction_cosine.clone() };
        Ok(MonotoneFamily::new(base, dir)?)
    }

    /// The map under study: `[map]`, or the family at `(a, ν)` with `a` solved from `alpha` if absent.
    pub fn resolve_map(&self) -> anyhow::Result<AnalyticCircleMap> {
        if let Some(m) = &self.map {
            return Ok(AnalyticCircleMap::new(m.offset, m.sine.clone(), m.cosine.clone())?);
        }
        let spec = self.family.as_ref().ok_or_else(|| anyhow::anyhow!("config needs [map] or [family]"))?;
        let fam = self.family()?;
        let a = match spec.a {
            Some(a) => a,
            None => smeasure::tongue::solve_tongue_point(&fam, &self.alpha_cf()?, spec.nu, self.tolerances.a)?.a,
        };
        Ok(fam.map(a, spec.nu)?)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol_kr: self.tolerances.kr,
            max_iter: self.tolerances.max_iter,
            rotation_tol: self.tolerances.rotation,
            rotation_budget: self.tolerances.rotation_budget,
            ..SolveOptions::default()
        }
    }

    pub fn tongue_options(&self) -> TongueOptions {
        TongueOptions { tol_a: self.tolerances.a, bins: self.bins, solve: self.solve_options(), fd_step: self.fd_step }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.bins, 4096);
        assert_eq!(c.digest(), ExperimentConfig::default().digest());
    }

    #[test]
    fn periodic_alpha() {
        let c = ExperimentConfig::parse("[alpha]\nquotients = [0, 1]\nperiod = 1\ndepth = 6\n").unwrap();
        assert_eq!(c.alpha_cf().unwrap().quotients(), &[0, 1, 1, 1, 1, 1]);
        let c = ExperimentConfig::parse("[alpha]\nquotients = [0, 3, 1, 2]\nperiod = 2\ndepth = 7\n").unwrap();
        assert_eq!(c.alpha_cf().unwrap().quotients(), &[0, 3, 1, 2, 1, 2, 1]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("bins = 1000").is_err());
        assert!(ExperimentConfig::parse("[tolerances]\nkr = 0.0").is_err());
        assert!(ExperimentConfig::parse("alpha = 0.618").is_err());
        assert!(ExperimentConfig::parse("[alpha]\nquotients = [0, 0, 1]").is_err());
        assert!(ExperimentConfig::parse("typo = 1").is_err());
    }
}

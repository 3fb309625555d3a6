//! Fixed points of the transfer operator: the discrete s-measures.
//!
//! The default solver is shift-and-invert iteration. Plain power iteration
//! is hopeless here: the subleading eigenvalues of the operator crowd the
//! unit circle (`1 - |λ₁|` is of order `1e-7` at `N = 2^13`), so the power
//! method needs millions of steps. Inverse iteration with a shift just above
//! the Perron root converges in a handful of sparse solves.
//!
//! Phase A locates the Perron root by Noda iteration: the shift is the upper
//! Collatz–Wielandt bound `max_i (Tw)_i / w_i`, which never drops below the
//! root, so iterates stay positive. Phase B then runs inverse iteration from
//! the caller's initial measure with the shift frozen, stopping on the KR gap
//! between successive normalized iterates.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;

use crate::circlemap::AnalyticCircleMap;
use crate::error::{Error, Result};
use crate::measure::checks::invariance_residual;
use crate::measure::grid::{kr_distance_weights, GridMeasure};
use crate::measure::transfer::TransferOperator;
use crate::rotation::{certified_irrational, DEFAULT_ROTATION_BUDGET, DEFAULT_ROTATION_TOL};

/// Default bin count.
pub const DEFAULT_BINS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Noda iteration followed by fixed-shift inverse iteration.
    ShiftInvert,
    /// Normalized power iteration.
    Power,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol_kr: f64,
    pub max_iter: usize,
    pub method: SolverMethod,
    /// Highest trig degree of the test functions in the residual.
    pub residual_degree: usize,
    pub rotation_tol: f64,
    pub rotation_budget: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_kr: 1e-9,
            max_iter: 100_000,
            method: SolverMethod::ShiftInvert,
            residual_degree: 8,
            rotation_tol: DEFAULT_ROTATION_TOL,
            rotation_budget: DEFAULT_ROTATION_BUDGET,
        }
    }
}

/// A solved s-measure with its diagnostics.
#[derive(Debug, Clone)]
pub struct SMeasure {
    pub measure: GridMeasure,
    /// Invariance residual against trig test functions, independent of the operator.
    pub residual: f64,
    /// Solver iterations (sparse solves or operator applications).
    pub iterations: usize,
    /// Mass of `T μ`; equals 1 at an exact s-measure.
    pub lambda: f64,
    /// KR distance between the last two iterates.
    pub kr_gap: f64,
}

impl SMeasure {
    pub fn lambda_defect(&self) -> f64 {
        (self.lambda - 1.0).abs()
    }
}

/// Solves for the s-measure of `map` on `n` bins starting from `init`.
///
/// Rejects maps whose rotation number is rational or cannot be certified.
pub fn solve_s_measure(
    map: &AnalyticCircleMap,
    s: f64,
    n: usize,
    opts: &SolveOptions,
    init: &GridMeasure,
) -> Result<SMeasure> {
    certified_irrational(map, opts.rotation_tol, opts.rotation_budget)?;
    let op = TransferOperator::build(map, s, n)?;
    solve_with_operator(&op, opts, init)
}

/// Solves the fixed-point problem of an assembled operator.
pub fn solve_with_operator(op: &TransferOperator, opts: &SolveOptions, init: &GridMeasure) -> Result<SMeasure> {
    if !(opts.tol_kr > 0.0) {
        return Err(Error::InvalidArgument("tol_kr must be positive".into()));
    }
    if init.len() != op.bins() {
        return Err(Error::InvalidArgument(format!(
            "initial measure has {} bins, operator has {}",
            init.len(),
            op.bins()
        )));
    }
    let (weights, iterations, kr_gap) = match opts.method {
        SolverMethod::ShiftInvert => shift_invert(op, opts, init)?,
        SolverMethod::Power => power(op, opts, init)?,
    };
    let mut image = vec![0.0; op.bins()];
    op.apply_raw(&weights, &mut image);
    let lambda = image.iter().sum();
    let measure = GridMeasure::normalized(weights)?;
    let residual = invariance_residual(op.map(), op.exponent(), &measure, opts.residual_degree)?;
    Ok(SMeasure { measure, residual, iterations, lambda, kr_gap })
}

fn power(op: &TransferOperator, opts: &SolveOptions, init: &GridMeasure) -> Result<(Vec<f64>, usize, f64)> {
    let mut w = init.weights().to_vec();
    let mut next = vec![0.0; w.len()];
    let mut gap = f64::INFINITY;
    for it in 1..=opts.max_iter {
        op.apply_raw(&w, &mut next);
        normalize(&mut next)?;
        gap = kr_distance_weights(&w, &next);
        std::mem::swap(&mut w, &mut next);
        if gap <= opts.tol_kr {
            return Ok((w, it, gap));
        }
    }
    Err(Error::SolverNotConverged { iterations: opts.max_iter, gap })
}

fn normalize(w: &mut [f64]) -> Result<()> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Linear(format!("iterate has invalid mass {total}")));
    }
    for x in w.iter_mut() {
        // roundoff can leave tiny negatives in a solve with a positive inverse
        *x = (*x / total).max(0.0);
    }
    Ok(())
}

/// `σ I - T` with a reusable symbolic factorization.
struct ShiftedSystem {
    mat: SparseColMat<usize, f64>,
    base: Vec<f64>,
    diag: Vec<usize>,
    symbolic: SymbolicLu<usize>,
}

impl ShiftedSystem {
    fn new(op: &TransferOperator) -> Result<Self> {
        let n = op.bins();
        let mut triplets: Vec<Triplet<usize, usize, f64>> = op
            .entries()
            .map(|(r, c, v)| Triplet { row: r, col: c, val: -v })
            .collect();
        triplets.extend((0..n).map(|i| Triplet { row: i, col: i, val: 0.0 }));
        let mat = SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Linear(format!("{e:?}")))?;
        let sym = mat.symbolic();
        let (col_ptr, row_idx) = (sym.col_ptr(), sym.row_idx());
        let mut diag = vec![usize::MAX; n];
        for c in 0..n {
            for e in col_ptr[c]..col_ptr[c + 1] {
                if row_idx[e] == c {
                    diag[c] = e;
                }
            }
        }
        let base = mat.val().to_vec();
        let symbolic = SymbolicLu::try_new(mat.symbolic()).map_err(|e| Error::Linear(format!("{e:?}")))?;
        Ok(Self { mat, base, diag, symbolic })
    }

    fn factor(&mut self, sigma: f64) -> Result<Lu<usize, f64>> {
        let vals = self.mat.val_mut();
        vals.copy_from_slice(&self.base);
        for &d in &self.diag {
            vals[d] += sigma;
        }
        Lu::try_new_with_symbolic(self.symbolic.clone(), self.mat.as_ref())
            .map_err(|e| Error::Linear(format!("{e:?}")))
    }
}

fn solve_into(lu: &Lu<usize, f64>, w: &mut [f64]) -> Result<()> {
    let n = w.len();
    lu.solve_in_place(MatMut::from_column_major_slice_mut(w, n, 1));
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Linear("shifted system is numerically singular".into()));
    }
    Ok(())
}

/// Collatz–Wielandt bounds `(min, max)` of `(Tw)_i / w_i` over the support of `w`.
fn collatz_wielandt(op: &TransferOperator, w: &[f64], tw: &mut [f64]) -> (f64, f64) {
    op.apply_raw(w, tw);
    let floor = 1e-14 * w.iter().copied().fold(0.0, f64::max);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (a, b) in w.iter().zip(tw.iter()) {
        if *a > floor {
            let r = b / a;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

fn shift_invert(op: &TransferOperator, opts: &SolveOptions, init: &GridMeasure) -> Result<(Vec<f64>, usize, f64)> {
    let n = op.bins();
    let mut system = ShiftedSystem::new(op)?;
    let bound = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let mut sigma = bound(op.row_sums()).min(bound(op.column_sums())) * (1.0 + 1e-9);
    if !(sigma > 0.0) {
        return Err(Error::Linear("operator has no positive entries".into()));
    }

    // Phase A: Noda iteration from Lebesgue
    let mut w = vec![1.0 / n as f64; n];
    let mut tw = vec![0.0; n];
    let mut solves = 0;
    let mut upper = sigma;
    for _ in 0..60 {
        let lu = system.factor(sigma)?;
        solve_into(&lu, &mut w)?;
        solves += 1;
        normalize(&mut w)?;
        let (lo, hi) = collatz_wielandt(op, &w, &mut tw);
        upper = upper.min(hi);
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let next = hi * (1.0 + 1e-12);
        if next >= sigma {
            break;
        }
        sigma = next;
    }

    // Phase B: inverse iteration from the caller's measure with a frozen shift
    let lu = system.factor(upper * (1.0 + 1e-10))?;
    let mut w = init.weights().to_vec();
    let mut next = w.clone();
    let mut gap = f64::INFINITY;
    for it in 1..=opts.max_iter {
        next.copy_from_slice(&w);
        solve_into(&lu, &mut next)?;
        normalize(&mut next)?;
        gap = kr_distance_weights(&w, &next);
        std::mem::swap(&mut w, &mut next);
        if gap <= opts.tol_kr {
            return Ok((w, solves + it, gap));
        }
    }
    Err(Error::SolverNotConverged { iterations: solves + opts.max_iter, gap })
}

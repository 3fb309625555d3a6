//! Grid measures, transfer operators and the s-measure solver.

pub mod atoms;
pub mod checks;
pub mod grid;
pub mod solve;
pub mod transfer;

pub use atoms::{atom_identity_defect, atom_series_partial_sums, pullback_atoms};
pub use checks::{birkhoff_invariant_measure, integrate_pullback, invariance_residual, midpoint_preimages};
pub use grid::{kr_distance, kr_distance_weights, GridMeasure, AMU1_MAGIC};
pub use solve::{
    solve_s_measure, solve_with_operator, SMeasure, SolveOptions, SolverMethod, DEFAULT_BINS,
};
pub use transfer::{build_transfer, Branch, TransferOperator};

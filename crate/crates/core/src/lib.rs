//! Numerics for automorphic s-measures of circle maps.
//!
//! The crate is organized bottom-up:
//!
//! * [`circlemap`]: trigonometric lifts, derivatives, inverses, critical points.
//! * [`rotation`]: certified rotation numbers, continued fractions, dynamical partitions.
//! * [`measure`]: grid measures, weighted transfer operators, the s-measure solver.
//! * [`tongue`]: irrational Arnold tongues and their derivative from the (−1)-measure.
//! * [`acceptance`]: the end-to-end property checks shared by the CLI and the test suite.

pub mod acceptance;
pub mod circlemap;
pub mod error;
pub mod measure;
pub mod rotation;
pub mod tongue;

pub use circlemap::{AnalyticCircleMap, CriticalOrder, CriticalPoint, LiftPoint, MapClass, TrigPolynomial};
pub use error::{Error, Result};
pub use measure::{kr_distance, GridMeasure, SMeasure, SolveOptions, SolverMethod, TransferOperator};
pub use rotation::{ContinuedFraction, DynamicalPartition, RationalOrder, RotationNumber};
pub use tongue::{MonotoneFamily, TonguePoint};

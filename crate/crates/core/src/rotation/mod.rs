//! Rotation numbers, continued fractions and dynamical partitions.

pub mod cf;
pub mod number;
pub mod partition;

pub use cf::{expand, ContinuedFraction};
pub use number::{
    certified_irrational, closest_return_times, compare_to_rational, excess_extrema, ladder,
    max_iterate_derivative, max_return_derivative, orbit_of_zero, orbit_from, base_point, closest_return_times_from, rotation_number, OrbitCursor,
    RationalOrder, RotationNumber, DEFAULT_ROTATION_BUDGET, DEFAULT_ROTATION_TOL,
};
pub use partition::{build_partition, build_partition_at, real_bounds_ratio, DynamicalPartition, PartitionInterval};

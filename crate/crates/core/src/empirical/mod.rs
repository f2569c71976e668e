//! Empirical distribution functions, empirical processes and their
//! piecewise-constant approximations on quantile partitions.

pub mod approx;
pub mod field;
pub mod partition;

pub use approx::{
    approx_process, check_approx_sandwich, expected_kernels, phi_j, sup_deviations,
    ApproxSandwichReport, PiecewiseField,
};
pub use field::{empirical_cdf, empirical_process, EmpiricalProcessField};
pub use partition::{build_partition, PartitionSystem};

//! Dyadic refinements of the quantile partition, the kernels `psi^(k)_l`,
//! chain indices and the schedules `K` and `eps_k`.

pub mod checks;
pub mod kernel;
pub mod schedule;
pub mod system;

pub use checks::{
    holder_growth_check, increment_norm_check, min_moment_order, top_increment_check,
    verify_sandwich, GrowthReport, IncrementReport, SandwichReport,
};
pub use kernel::{phi, ramp};
pub use schedule::{schedule, Schedule};
pub use system::{ChainIndex, ChainingSystem, REFINEMENT_BUDGET};

//! Shared numeric foundations: points and grids, compactification, the law of
//! `X_0`, Holder norms and the modulus of continuity.

pub mod compactify;
pub mod counting;
pub mod distribution;
pub mod grid;
pub mod holder;
pub mod modulus;

pub use compactify::{compactify, decompactify};
pub use distribution::{DistributionModel, Marginal, ModelKind, DEFAULT_CALIBRATION_SIZE};
pub use grid::{EvaluationGrid, GridFunction, Point};
pub use holder::{holder_norm, HolderEstimate, HolderFunction};
pub use modulus::{modulus_of_continuity, modulus_on_region, ModulusEstimate, ModulusFit};

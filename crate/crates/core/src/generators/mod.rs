//! Stationary process families with reproducible seeding.
//!
//! Every generator is a pure function of `(model, n, seed, replicate)`.

pub mod iid;
pub mod linear;
pub mod lipschitz;
pub mod markov;
pub mod path;
pub mod poly;
pub mod torus;

pub use iid::IidUniform;
pub use linear::{LinearProcessModel, UniformInnovation};
pub use lipschitz::{IterationMap, LipschitzIterationModel, UniformNoise};
pub use markov::{FiniteMarkovModel, MarkovStart};
pub use path::SamplePath;
pub use torus::{
    cat_map, companion_matrix, find_quasi_hyperbolic, validate_torus, TorusAutomorphism,
    TorusClass, DEFAULT_PRECISION_CAP_BITS,
};

use serde::Serialize;

use crate::error::Result;
use crate::foundation::DistributionModel;

/// Replicate id reserved for calibration runs.
pub const CALIBRATION_REPLICATE: u64 = (1 << 47) - 1;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessGenerator {
    Iid(IidUniform),
    Torus {
        automorphism: TorusAutomorphism,
        precision_cap_bits: u64,
    },
    Linear(LinearProcessModel),
    Lipschitz(LipschitzIterationModel),
    Markov {
        model: FiniteMarkovModel,
        start: MarkovStart,
    },
}

impl ProcessGenerator {
    pub fn torus(automorphism: TorusAutomorphism) -> Self {
        ProcessGenerator::Torus {
            automorphism,
            precision_cap_bits: DEFAULT_PRECISION_CAP_BITS,
        }
    }

    pub fn markov(model: FiniteMarkovModel) -> Self {
        ProcessGenerator::Markov {
            model,
            start: MarkovStart::Stationary,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ProcessGenerator::Iid(_) => "iid",
            ProcessGenerator::Torus { .. } => "torus",
            ProcessGenerator::Linear(_) => "linear",
            ProcessGenerator::Lipschitz(_) => "lipschitz",
            ProcessGenerator::Markov { .. } => "markov",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ProcessGenerator::Iid(g) => g.dim,
            ProcessGenerator::Torus { automorphism, .. } => automorphism.dimension(),
            ProcessGenerator::Linear(m) => m.dimension(),
            ProcessGenerator::Lipschitz(m) => m.dimension(),
            ProcessGenerator::Markov { model, .. } => model.dimension(),
        }
    }

    pub fn simulate(&self, n: usize, seed: u64, replicate: u64) -> Result<SamplePath> {
        match self {
            ProcessGenerator::Iid(g) => g.simulate(n, seed, replicate),
            ProcessGenerator::Torus {
                automorphism,
                precision_cap_bits,
            } => automorphism.simulate(n, seed, replicate, *precision_cap_bits),
            ProcessGenerator::Linear(m) => m.simulate(n, seed, replicate),
            ProcessGenerator::Lipschitz(m) => m.simulate(n, seed, replicate),
            ProcessGenerator::Markov { model, start } => model.simulate(n, seed, replicate, *start),
        }
    }

    /// The exact law of `X_0` when it is available in closed form
    /// (the uniform cube for i.i.d. uniforms and ergodic torus automorphisms).
    pub fn analytic_model(&self) -> Option<DistributionModel> {
        match self {
            ProcessGenerator::Iid(g) => DistributionModel::uniform_cube(g.dim).ok(),
            ProcessGenerator::Torus { automorphism, .. } => {
                DistributionModel::uniform_cube(automorphism.dimension()).ok()
            }
            _ => None,
        }
    }

    /// Analytic law if known, otherwise the empirical law of `size` points of
    /// one long path drawn on the reserved calibration replicate.
    pub fn calibrated_model(&self, size: usize, seed: u64) -> Result<DistributionModel> {
        if let Some(m) = self.analytic_model() {
            return Ok(m);
        }
        let path = self.simulate(size, seed, CALIBRATION_REPLICATE)?;
        let d = path.dim();
        let values = path.values().to_vec();
        DistributionModel::empirical(values, d, Some(seed))
    }
}

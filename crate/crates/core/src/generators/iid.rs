use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::SamplePath;
use crate::error::{Error, Result};
use crate::rng::{lane, stream};

/// Independent uniform points of `[0,1)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IidUniform {
    pub dim: usize,
}

impl IidUniform {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        Ok(Self { dim })
    }

    pub fn simulate(&self, n: usize, seed: u64, replicate: u64) -> Result<SamplePath> {
        if n == 0 {
            return Err(Error::Empty("path length"));
        }
        let mut rng = stream(seed, replicate, lane::MAIN);
        let values = (0..n * self.dim).map(|_| rng.random::<f64>()).collect();
        SamplePath::new(values, self.dim, "iid", seed, replicate)
    }
}

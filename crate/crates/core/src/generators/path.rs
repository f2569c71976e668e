use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One realization `(X_1, ..., X_n)` of an `R^d`-valued process, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    n: usize,
    d: usize,
    values: Vec<f64>,
    pub generator_id: String,
    pub seed: u64,
    pub replicate_id: u64,
    pub metadata: BTreeMap<String, f64>,
}

impl SamplePath {
    pub fn new(
        values: Vec<f64>,
        d: usize,
        generator_id: impl Into<String>,
        seed: u64,
        replicate_id: u64,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument(
                "path dimension must be at least 1".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::Empty("sample path"));
        }
        if values.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: values.len() % d,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "sample path values must be finite".into(),
            ));
        }
        Ok(Self {
            n: values.len() / d,
            d,
            values,
            generator_id: generator_id.into(),
            seed,
            replicate_id,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row `k` (0-based), i.e. `X_{k+1}`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.d..(k + 1) * self.d]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(i)
            .step_by(self.d)
            .copied()
            .collect()
    }

    /// The first `n` rows as a new path with the same provenance.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let mut p = Self::new(
            self.values[..n.min(self.n) * self.d].to_vec(),
            self.d,
            self.generator_id.clone(),
            self.seed,
            self.replicate_id,
        )?;
        p.metadata = self.metadata.clone();
        Ok(p)
    }

    pub fn with_metadata(mut self, key: &str, value: f64) -> Self {
        self.metadata.insert(key.into(), value);
        self
    }
}

//! Truncated linear processes `X_k = sum_{i=0}^{L} a_i xi_{k-i}` driven by bounded i.i.d. innovations.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::SamplePath;
use crate::error::{Error, Result};
use crate::rng::{lane, stream};

/// Innovations uniform on `[-half_width, half_width]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformInnovation {
    pub half_width: f64,
}

impl UniformInnovation {
    pub fn sup_norm(&self) -> f64 {
        self.half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProcessModel {
    dim: usize,
    /// `a_0, ..., a_L`, each row-major `d x d`.
    coefficients: Vec<Vec<f64>>,
    theta: f64,
    innovation: UniformInnovation,
}

/// Slack allowed in the decay check `||a_i||_inf <= theta^i`.
const DECAY_SLACK: f64 = 1e-12;

/// `ceil(log(1e-12) / log(theta))`.
pub fn default_truncation(theta: f64) -> usize {
    (1e-12f64.ln() / theta.ln()).ceil() as usize
}

/// Maximum absolute row sum.
pub fn operator_max_norm(a: &[f64], d: usize) -> f64 {
    a.chunks_exact(d)
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl LinearProcessModel {
    pub fn new(
        d: usize,
        coefficients: Vec<Vec<f64>>,
        theta: f64,
        innovation: UniformInnovation,
    ) -> Result<Self> {
        if d == 0 || coefficients.is_empty() {
            return Err(Error::InvalidModel(
                "linear process needs d >= 1 and at least a_0".into(),
            ));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::OutOfRange {
                what: "theta",
                value: theta,
            });
        }
        if !(innovation.half_width.is_finite() && innovation.half_width >= 0.0) {
            return Err(Error::InvalidModel("innovations must be bounded".into()));
        }
        for (i, a) in coefficients.iter().enumerate() {
            if a.len() != d * d || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "coefficient a_{i} must be a finite {d}x{d} matrix"
                )));
            }
            let norm = operator_max_norm(a, d);
            let bound = theta.powi(i as i32);
            if norm > bound * (1.0 + DECAY_SLACK) + DECAY_SLACK {
                return Err(Error::InvalidModel(format!(
                    "||a_{i}|| = {norm} exceeds theta^{i} = {bound}"
                )));
            }
        }
        Ok(Self {
            dim: d,
            coefficients,
            theta,
            innovation,
        })
    }

    /// `a_i = theta^i C^i` with `C` the cyclic shift, truncated at the default lag.
    pub fn geometric(d: usize, theta: f64, truncation: Option<usize>) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::OutOfRange {
                what: "theta",
                value: theta,
            });
        }
        let l = truncation.unwrap_or_else(|| default_truncation(theta));
        let coefficients = (0..=l)
            .map(|i| {
                let mut a = alloc::vec![0.0; d * d];
                let w = theta.powi(i as i32);
                for r in 0..d {
                    a[r * d + (r + i) % d] = w;
                }
                a
            })
            .collect();
        Self::new(
            d,
            coefficients,
            theta,
            UniformInnovation { half_width: 1.0 },
        )
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn truncation(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn innovation(&self) -> UniformInnovation {
        self.innovation
    }

    /// `theta^(L+1) / (1 - theta) * ||xi||_inf`.
    pub fn truncation_bound(&self) -> f64 {
        self.theta.powi(self.coefficients.len() as i32) / (1.0 - self.theta)
            * self.innovation.sup_norm()
    }

    /// Bound on `|X_k|` in the max norm.
    pub fn sup_bound(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|a| operator_max_norm(a, self.dim))
            .sum::<f64>()
            * self.innovation.sup_norm()
    }

    pub fn simulate(&self, n: usize, seed: u64, replicate: u64) -> Result<SamplePath> {
        if n == 0 {
            return Err(Error::Empty("path length"));
        }
        let d = self.dim;
        let l = self.truncation();
        let mut rng = stream(seed, replicate, lane::MAIN);
        let w = self.innovation.half_width;
        let xi: Vec<f64> = (0..(n + l) * d)
            .map(|_| w * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let mut values = alloc::vec![0.0; n * d];
        for k in 0..n {
            let out = &mut values[k * d..(k + 1) * d];
            // Innovation xi_{k-i} sits at row k + l - i.
            for (i, a) in self.coefficients.iter().enumerate() {
                let e = &xi[(k + l - i) * d..(k + l - i + 1) * d];
                for r in 0..d {
                    let row = &a[r * d..(r + 1) * d];
                    let mut s = 0.0;
                    for c in 0..d {
                        s += row[c] * e[c];
                    }
                    out[r] += s;
                }
            }
        }
        Ok(SamplePath::new(values, d, "linear", seed, replicate)?
            .with_metadata("truncation_bound", self.truncation_bound())
            .with_metadata("truncation_lag", l as f64))
    }
}

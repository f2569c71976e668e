use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::foundation::DistributionModel;

/// Regular probability partition of step `h = 1/m` and its per-axis
/// quantile breakpoints `t_{i,0} < ... < t_{i,m} = +inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionSystem {
    m: usize,
    dim: usize,
    breakpoints: Vec<Vec<f64>>,
    model_signature: u64,
}

/// Quantile partition with `m` cells per axis.
pub fn build_partition(model: &DistributionModel, m: usize) -> Result<PartitionSystem> {
    if m < 2 {
        return Err(Error::OutOfRange {
            what: "cells per axis",
            value: m as f64,
        });
    }
    let d = model.dimension();
    let mut breakpoints = Vec::with_capacity(d);
    for axis in 0..d {
        let mut t = Vec::with_capacity(m + 1);
        for j in 0..=m {
            t.push(model.quantile(axis, j as f64 / m as f64)?);
        }
        for j in 1..=m {
            if t[j] <= t[j - 1] {
                return Err(Error::QuantileCollision {
                    axis,
                    index: j,
                    value: t[j],
                });
            }
        }
        breakpoints.push(t);
    }
    Ok(PartitionSystem {
        m,
        dim: d,
        breakpoints,
        model_signature: model.signature(),
    })
}

impl PartitionSystem {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Probability breakpoint `r_j = j h`.
    pub fn r(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    /// `t_{i,0}, ..., t_{i,m}`.
    pub fn axis(&self, i: usize) -> &[f64] {
        &self.breakpoints[i]
    }

    /// `t_{i,j}` for `j = -1 ..= m`, with `t_{i,-1} = -inf`.
    pub fn t(&self, i: usize, j: isize) -> f64 {
        if j < 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[i][j as usize]
        }
    }

    pub fn model_signature(&self) -> u64 {
        self.model_signature
    }

    pub fn matches(&self, model: &DistributionModel) -> bool {
        self.dim == model.dimension() && self.model_signature == model.signature()
    }

    /// Cell `j` (1-based) with `t_{j-1} <= x < t_j`; `+inf` belongs to the top cell.
    pub fn cell_of(&self, axis: usize, x: f64) -> Option<usize> {
        let t = &self.breakpoints[axis];
        if x < t[0] {
            return None;
        }
        if x == f64::INFINITY {
            return Some(self.m);
        }
        Some(t.partition_point(|v| *v <= x).min(self.m))
    }

    /// Cell `j` with `t_{j-1} < x <= t_j`, used for left limits.
    pub fn cell_of_left(&self, axis: usize, x: f64) -> Option<usize> {
        let t = &self.breakpoints[axis];
        if x <= t[0] {
            return None;
        }
        Some(t.partition_point(|v| *v < x).min(self.m))
    }

    pub fn cell_count(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    /// Flat row-major index of the 1-based cell multi-index.
    pub fn cell_flat(&self, j: &[usize]) -> usize {
        j.iter().fold(0, |acc, &ji| acc * self.m + (ji - 1))
    }

    pub fn cell_multi(&self, mut flat: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.dim];
        for i in (0..self.dim).rev() {
            out[i] = flat % self.m + 1;
            flat /= self.m;
        }
        out
    }
}

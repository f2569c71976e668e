use alloc::format;
use alloc::vec::Vec;

use serde::Serialize;

use super::kernel::ramp;
use super::schedule::{schedule, Schedule};
use crate::empirical::PartitionSystem;
use crate::error::{Error, Result};
use crate::foundation::{DistributionModel, ModulusFit, Point};

/// Largest number of refinement points stored per axis.
pub const REFINEMENT_BUDGET: u64 = 1 << 26;

/// Dyadic refinements of a quantile partition down to depth `K`.
///
/// Only the finest level is stored: the level-`k` point with global index
/// `g = (j - 1) 2^k + l` is the finest point `g 2^(K-k)`, so refinement,
/// boundary stitching and chain consistency hold bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainingSystem {
    partition: PartitionSystem,
    depth: u32,
    alpha: f64,
    epsilon: f64,
    modulus: Option<ModulusFit>,
    fine: Vec<Vec<f64>>,
}

/// Chain of a point `t` in cell `j`: `levels[k][i] = l_i(k, t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainIndex {
    pub cell: Vec<usize>,
    pub levels: Vec<Vec<u64>>,
}

impl ChainingSystem {
    pub fn new(
        model: &DistributionModel,
        partition: PartitionSystem,
        depth: u32,
        alpha: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !partition.matches(model) {
            return Err(Error::ModelMismatch);
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::OutOfRange {
                what: "holder exponent",
                value: alpha,
            });
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: epsilon,
            });
        }
        let m = partition.m() as u64;
        if depth >= 40 || (m << depth) > REFINEMENT_BUDGET {
            return Err(Error::Budget {
                required: u128::from(m) << depth.min(100),
                cap: u128::from(REFINEMENT_BUDGET),
            });
        }
        let total = m << depth;
        let mut fine = Vec::with_capacity(partition.dimension());
        for axis in 0..partition.dimension() {
            let mut s = Vec::with_capacity(total as usize + 1);
            for g in 0..=total {
                s.push(model.quantile(axis, g as f64 / total as f64)?);
            }
            for g in 1..s.len() {
                if s[g] <= s[g - 1] {
                    return Err(Error::QuantileCollision {
                        axis,
                        index: g,
                        value: s[g],
                    });
                }
            }
            fine.push(s);
        }
        Ok(Self {
            partition,
            depth,
            alpha,
            epsilon,
            modulus: model.modulus_fit().copied(),
            fine,
        })
    }

    /// Depth from the schedule for sample size `n`.
    pub fn for_sample_size(
        model: &DistributionModel,
        partition: PartitionSystem,
        n: usize,
        alpha: f64,
        epsilon: f64,
    ) -> Result<(Self, Schedule)> {
        let s = schedule(n, partition.h(), epsilon, partition.dimension())?;
        let sys = Self::new(model, partition, s.k, alpha, epsilon)?;
        Ok((sys, s))
    }

    pub fn partition(&self) -> &PartitionSystem {
        &self.partition
    }
    pub fn depth(&self) -> u32 {
        self.depth
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn modulus(&self) -> Option<&ModulusFit> {
        self.modulus.as_ref()
    }
    pub fn dimension(&self) -> usize {
        self.partition.dimension()
    }

    fn fine_index(&self, j: usize, k: u32, l: i64) -> Option<usize> {
        let m = self.partition.m() as i64;
        let per = 1i64 << k;
        if j == 0 || j as i64 > m || k > self.depth || l < -1 || l > per + 1 {
            return None;
        }
        let g = (j as i64 - 1) * per + l;
        if g < 0 || g > m * per {
            return None;
        }
        Some((g as usize) << (self.depth - k))
    }

    /// `s^(k)_{i,j,l}` for `l = -1 ..= 2^k + 1`, where defined.
    pub fn s_point(&self, axis: usize, j: usize, k: u32, l: i64) -> Result<f64> {
        if axis >= self.dimension() {
            return Err(Error::IndexOutOfRange(format!("axis {axis}")));
        }
        self.fine_index(j, k, l)
            .map(|g| self.fine[axis][g])
            .ok_or_else(|| Error::IndexOutOfRange(format!("s point (j={j}, k={k}, l={l})")))
    }

    /// One-dimensional factor of `psi^(k)_l` on axis `i` of cell `j`.
    pub fn psi_factor(&self, axis: usize, j: usize, k: u32, l: u64, x: f64) -> Result<f64> {
        let per = 1u64 << k;
        if l > per + 1 {
            return Err(Error::IndexOutOfRange(format!("l = {l} at level {k}")));
        }
        if j == 1 && l == 0 {
            return Ok(0.0);
        }
        if j == self.partition.m() && l >= per {
            return Ok(1.0);
        }
        let s = self.s_point(axis, j, k, l as i64)?;
        let s_prev = self.s_point(axis, j, k, l as i64 - 1)?;
        Ok(ramp(x, s, s_prev))
    }

    /// `psi^(k)_l(x)` for cell `j`.
    pub fn psi(&self, k: u32, cell: &[usize], l: &[u64], x: &[f64]) -> Result<f64> {
        let d = self.dimension();
        if cell.len() != d || l.len() != d || x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: cell.len().min(l.len()).min(x.len()),
            });
        }
        if k > self.depth {
            return Err(Error::IndexOutOfRange(format!(
                "level {k} beyond depth {}",
                self.depth
            )));
        }
        let mut prod = 1.0;
        for i in 0..d {
            prod *= self.psi_factor(i, cell[i], k, l[i], x[i])?;
        }
        Ok(prod)
    }

    /// `l_i(k, t) = max { l : s^(k)_{i,j,l} <= t_i }` for every level.
    pub fn chain_index(&self, t: &Point) -> Result<ChainIndex> {
        let d = self.dimension();
        if t.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: t.dim(),
            });
        }
        let mut cell = Vec::with_capacity(d);
        for (i, &ti) in t.coords().iter().enumerate() {
            match self.partition.cell_of(i, ti) {
                Some(j) if ti < self.partition.t(i, self.partition.m() as isize) => cell.push(j),
                _ => return Err(Error::OutsideRegion { axis: i, value: ti }),
            }
        }
        let levels = (0..=self.depth)
            .map(|k| {
                let stride = 1usize << (self.depth - k);
                let per = 1usize << k;
                (0..d)
                    .map(|i| {
                        let base = (cell[i] - 1) << self.depth;
                        let axis = &self.fine[i];
                        // Number of l in 0..=2^k with s_l <= t, minus one.
                        let (mut lo, mut hi) = (0usize, per + 1);
                        while lo < hi {
                            let mid = (lo + hi) / 2;
                            if axis[base + mid * stride] <= t.coords()[i] {
                                lo = mid + 1;
                            } else {
                                hi = mid;
                            }
                        }
                        (lo - 1) as u64
                    })
                    .collect()
            })
            .collect();
        Ok(ChainIndex { cell, levels })
    }
}

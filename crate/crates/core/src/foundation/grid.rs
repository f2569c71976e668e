use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::compactify::decompactify;
use crate::error::{Error, Result};

/// A point of the extended space `[-inf, inf]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        if coords.iter().any(|c| c.is_nan()) {
            return Err(Error::InvalidArgument("NaN coordinate".into()));
        }
        Ok(Self { coords })
    }

    pub fn splat(d: usize, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; d])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate-wise order.
    pub fn le(&self, other: &Point) -> bool {
        self.coords.iter().zip(&other.coords).all(|(a, b)| a <= b)
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Product grid whose axes carry `-inf` and `+inf` sentinels around strictly
/// increasing finite breakpoints. Vertices are stored row-major (last axis fastest).
///
/// Serializes as its finite breakpoints only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct EvaluationGrid {
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    vertex_count: usize,
}

impl EvaluationGrid {
    /// Builds a grid from finite breakpoints; the sentinels are added here.
    pub fn new(finite_axes: Vec<Vec<f64>>) -> Result<Self> {
        let axes = finite_axes
            .into_iter()
            .map(|a| {
                let mut full = Vec::with_capacity(a.len() + 2);
                full.push(f64::NEG_INFINITY);
                full.extend(a);
                full.push(f64::INFINITY);
                full
            })
            .collect();
        Self::from_full_axes(axes)
    }

    /// Builds a grid from axes that already include both sentinels.
    pub fn from_full_axes(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.len() < 2 || a[0] != f64::NEG_INFINITY || a[a.len() - 1] != f64::INFINITY {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} must start at -inf and end at +inf"
                )));
            }
            if a[1..a.len() - 1].iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} has a non-finite interior breakpoint"
                )));
            }
            if a.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {i} is not strictly increasing"
                )));
            }
        }
        let d = axes.len();
        let mut strides = alloc::vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1]
                .checked_mul(axes[i + 1].len())
                .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        }
        let vertex_count = strides[0]
            .checked_mul(axes[0].len())
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
        Ok(Self {
            axes,
            strides,
            vertex_count,
        })
    }

    /// `per_axis` finite breakpoints per axis, equally spaced on the compactified line.
    pub fn compactified_uniform(d: usize, per_axis: usize) -> Result<Self> {
        let axis: Vec<f64> = (1..=per_axis)
            .map(|k| decompactify(k as f64 / (per_axis + 1) as f64))
            .collect();
        Self::new(alloc::vec![axis; d])
    }

    /// `per_axis` finite breakpoints per axis, equally spaced on `[lo, hi]`.
    pub fn regular(d: usize, lo: f64, hi: f64, per_axis: usize) -> Result<Self> {
        if per_axis == 0 || !(lo < hi) {
            return Err(Error::InvalidGrid(
                "regular grid needs lo < hi and at least one point".into(),
            ));
        }
        let axis: Vec<f64> = if per_axis == 1 {
            alloc::vec![lo]
        } else {
            (0..per_axis)
                .map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64)
                .collect()
        };
        Self::new(alloc::vec![axis; d])
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Full axis including sentinels.
    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    /// Finite breakpoints of an axis.
    pub fn finite_axis(&self, i: usize) -> &[f64] {
        let a = &self.axes[i];
        &a[1..a.len() - 1]
    }

    pub fn interior_count(&self, i: usize) -> usize {
        self.axes[i].len() - 2
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(a, b)| a * b).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = alloc::vec![0; self.axes.len()];
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = flat / s;
            flat %= s;
        }
        out
    }

    pub fn vertex_coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(i, &k)| self.axes[i][k])
            .collect()
    }

    pub fn vertex(&self, flat: usize) -> Point {
        Point {
            coords: self.vertex_coords(flat),
        }
    }

    /// Flat index of the vertex equal to `coords`, if it is one.
    pub fn locate(&self, coords: &[f64]) -> Option<usize> {
        if coords.len() != self.dimension() {
            return None;
        }
        let mut flat = 0;
        for (i, c) in coords.iter().enumerate() {
            let k = self.axes[i].binary_search_by(|v| v.total_cmp(c)).ok()?;
            flat += k * self.strides[i];
        }
        Some(flat)
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    finite_axes: Vec<Vec<f64>>,
}

impl From<EvaluationGrid> for GridRepr {
    fn from(g: EvaluationGrid) -> Self {
        let finite_axes = (0..g.dimension())
            .map(|i| g.finite_axis(i).to_vec())
            .collect();
        Self { finite_axes }
    }
}

impl TryFrom<GridRepr> for EvaluationGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        EvaluationGrid::new(r.finite_axes)
    }
}

/// Real values attached to every vertex of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: EvaluationGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: EvaluationGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.vertex_count(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid function values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: EvaluationGrid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.vertex_count())
            .map(|k| f(&grid.vertex_coords(k)))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &EvaluationGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, multi: &[usize]) -> f64 {
        self.values[self.grid.flat_index(multi)]
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid(
                "functions live on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| f(*v)).collect(),
        )
    }
}

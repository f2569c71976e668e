use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::counting::dominance_counts;
use super::grid::{EvaluationGrid, GridFunction, Point};
use super::modulus::ModulusFit;
use crate::error::{Error, Result};
use crate::stats::{normal_cdf, normal_pdf, normal_quantile};

/// One-dimensional marginal law of a product model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        match *self {
            Marginal::Uniform { lo, hi } if lo.is_finite() && hi.is_finite() && lo < hi => Ok(()),
            Marginal::Normal { mean, sd } if mean.is_finite() && sd.is_finite() && sd > 0.0 => {
                Ok(())
            }
            _ => Err(Error::InvalidModel(format!("bad marginal {self:?}"))),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Normal { mean, sd } => normal_cdf((x - mean) / sd),
        }
    }

    /// `sup { s : F(s) <= r }`.
    pub fn quantile(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return f64::INFINITY;
        }
        match *self {
            Marginal::Uniform { lo, hi } => lo + r * (hi - lo),
            Marginal::Normal { mean, sd } => mean + sd * normal_quantile(r),
        }
    }

    /// Smallest and largest points of the support (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// `int_{-inf}^x F(u) du`.
    pub fn integrated_cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => {
                let w = hi - lo;
                let u = (x - lo) / w;
                let g = if u <= 0.0 {
                    0.0
                } else if u <= 1.0 {
                    0.5 * u * u
                } else {
                    u - 0.5
                };
                w * g
            }
            Marginal::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                sd * (z * normal_cdf(z) + normal_pdf(z))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Normal { mean, .. } => mean,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Marginal::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    AnalyticUniformCube,
    AnalyticProduct,
    EmpiricalFromCalibrationSample,
}

#[derive(Debug, Clone)]
struct Calibration {
    points: Vec<f64>,
    sorted: Vec<Vec<f64>>,
    seed: Option<u64>,
}

#[derive(Debug, Clone)]
enum Repr {
    UniformCube,
    Product(Vec<Marginal>),
    Empirical(Calibration),
}

/// Law of `X_0`: either analytic or a plug-in built from a calibration sample.
#[derive(Debug, Clone)]
pub struct DistributionModel {
    dimension: usize,
    repr: Repr,
    modulus: Option<ModulusFit>,
}

/// Default size of calibration samples for non-analytic laws.
pub const DEFAULT_CALIBRATION_SIZE: usize = 1_000_000;

impl DistributionModel {
    pub fn uniform_cube(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        Ok(Self {
            dimension: d,
            repr: Repr::UniformCube,
            modulus: None,
        })
    }

    pub fn product(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(Self {
            dimension: marginals.len(),
            repr: Repr::Product(marginals),
            modulus: None,
        })
    }

    /// Empirical law of a row-major calibration sample with `d` columns.
    pub fn empirical(points: Vec<f64>, d: usize, seed: Option<u64>) -> Result<Self> {
        if d == 0 || points.is_empty() || points.len() % d != 0 {
            return Err(Error::InvalidModel(
                "calibration sample must be a nonempty n x d array".into(),
            ));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "calibration sample must be finite".into(),
            ));
        }
        let sorted = (0..d)
            .map(|i| {
                let mut col: Vec<f64> = points.iter().skip(i).step_by(d).copied().collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Ok(Self {
            dimension: d,
            repr: Repr::Empirical(Calibration {
                points,
                sorted,
                seed,
            }),
            modulus: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> ModelKind {
        match self.repr {
            Repr::UniformCube => ModelKind::AnalyticUniformCube,
            Repr::Product(_) => ModelKind::AnalyticProduct,
            Repr::Empirical(_) => ModelKind::EmpiricalFromCalibrationSample,
        }
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.repr, Repr::Empirical(_))
    }

    pub fn marginals(&self) -> Option<&[Marginal]> {
        match &self.repr {
            Repr::Product(m) => Some(m),
            _ => None,
        }
    }

    pub fn calibration_points(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Empirical(c) => Some(&c.points),
            _ => None,
        }
    }

    pub fn calibration_seed(&self) -> Option<u64> {
        match &self.repr {
            Repr::Empirical(c) => c.seed,
            _ => None,
        }
    }

    pub fn calibration_size(&self) -> Option<usize> {
        self.calibration_points().map(|p| p.len() / self.dimension)
    }

    pub fn modulus_fit(&self) -> Option<&ModulusFit> {
        self.modulus.as_ref()
    }

    pub fn with_modulus_fit(mut self, fit: Option<ModulusFit>) -> Self {
        self.modulus = fit;
        self
    }

    /// Order-sensitive fingerprint of the model parameters, used to tie
    /// partitions to the model that built them.
    pub fn signature(&self) -> u64 {
        let mut h = Fnv::new();
        h.word(self.dimension as u64);
        match &self.repr {
            Repr::UniformCube => h.word(1),
            Repr::Product(ms) => {
                h.word(2);
                for m in ms {
                    match *m {
                        Marginal::Uniform { lo, hi } => {
                            h.word(10);
                            h.word(lo.to_bits());
                            h.word(hi.to_bits());
                        }
                        Marginal::Normal { mean, sd } => {
                            h.word(11);
                            h.word(mean.to_bits());
                            h.word(sd.to_bits());
                        }
                    }
                }
            }
            Repr::Empirical(c) => {
                h.word(3);
                h.word(c.points.len() as u64);
                for v in &c.points {
                    h.word(v.to_bits());
                }
            }
        }
        h.finish()
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found,
            });
        }
        Ok(())
    }

    pub fn cdf(&self, t: &Point) -> Result<f64> {
        self.check_dim(t.dim())?;
        Ok(self.cdf_coords(t.coords()))
    }

    /// `F(t)` for a coordinate slice of the right length.
    pub fn cdf_coords(&self, t: &[f64]) -> f64 {
        if t.iter().any(|v| *v == f64::NEG_INFINITY) {
            return 0.0;
        }
        match &self.repr {
            Repr::Empirical(c) => {
                let d = self.dimension;
                let hits = c
                    .points
                    .chunks_exact(d)
                    .filter(|x| x.iter().zip(t).all(|(a, b)| a <= b))
                    .count();
                hits as f64 / (c.points.len() / d) as f64
            }
            _ => (0..self.dimension)
                .map(|i| self.marginal_cdf(i, t[i]))
                .product(),
        }
    }

    pub fn marginal_cdf(&self, axis: usize, x: f64) -> f64 {
        match &self.repr {
            Repr::UniformCube => x.clamp(0.0, 1.0),
            Repr::Product(ms) => ms[axis].cdf(x),
            Repr::Empirical(c) => {
                let col = &c.sorted[axis];
                col.partition_point(|v| *v <= x) as f64 / col.len() as f64
            }
        }
    }

    /// Marginal quantile `sup { s : F_i(s) <= r }`, with `+inf` at `r = 1`.
    pub fn quantile(&self, axis: usize, r: f64) -> Result<f64> {
        if axis >= self.dimension {
            return Err(Error::IndexOutOfRange(format!(
                "axis {axis} in dimension {}",
                self.dimension
            )));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutOfRange {
                what: "quantile level",
                value: r,
            });
        }
        Ok(match &self.repr {
            Repr::UniformCube => {
                if r < 1.0 {
                    r
                } else {
                    f64::INFINITY
                }
            }
            Repr::Product(ms) => ms[axis].quantile(r),
            Repr::Empirical(c) => {
                let col = &c.sorted[axis];
                let k = safe_floor(r * col.len() as f64);
                if k < col.len() {
                    col[k]
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// Smallest and largest points of the marginal support.
    pub fn marginal_support(&self, axis: usize) -> (f64, f64) {
        match &self.repr {
            Repr::UniformCube => (0.0, 1.0),
            Repr::Product(ms) => ms[axis].support(),
            Repr::Empirical(c) => {
                let col = &c.sorted[axis];
                (col[0], col[col.len() - 1])
            }
        }
    }

    /// Row-major table of `F` on the product of `axes` (sorted, may contain infinities).
    pub fn cdf_on_axes(&self, axes: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_dim(axes.len())?;
        match &self.repr {
            Repr::Empirical(c) => {
                let n = (c.points.len() / self.dimension) as f64;
                let counts = dominance_counts(&c.points, self.dimension, axes)?;
                Ok(counts.into_iter().map(|k| k as f64 / n).collect())
            }
            _ => {
                let per_axis: Vec<Vec<f64>> = axes
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a.iter().map(|x| self.marginal_cdf(i, *x)).collect())
                    .collect();
                Ok(outer_product(&per_axis))
            }
        }
    }

    pub fn cdf_on_grid(&self, grid: &EvaluationGrid) -> Result<GridFunction> {
        let values = self.cdf_on_axes(grid.axes())?;
        GridFunction::new(grid.clone(), values)
    }

    /// `E[phi((X_i - a) / g)]` for the ramp kernel, i.e. `(1/g) int_{a-g}^{a} F_i`,
    /// available for analytic laws with finite `a` and `g > 0`.
    pub fn ramp_mean(&self, axis: usize, a: f64, g: f64) -> Option<f64> {
        let marginal = match &self.repr {
            Repr::UniformCube => Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Repr::Product(ms) => ms[axis],
            Repr::Empirical(_) => return None,
        };
        Some(((marginal.integrated_cdf(a) - marginal.integrated_cdf(a - g)) / g).clamp(0.0, 1.0))
    }

    /// Draws one point of the law into `out`. Empirical laws resample the
    /// calibration points.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.repr {
            Repr::UniformCube => out.iter_mut().for_each(|v| *v = rng.random::<f64>()),
            Repr::Product(ms) => out.iter_mut().zip(ms).for_each(|(v, m)| *v = m.sample(rng)),
            Repr::Empirical(c) => {
                let d = self.dimension;
                let k = rng.random_range(0..c.points.len() / d);
                out.copy_from_slice(&c.points[k * d..(k + 1) * d]);
            }
        }
    }
}

/// `floor(x)` that treats values within a relative 1e-9 of an integer as that integer.
pub(crate) fn safe_floor(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

pub(crate) fn outer_product(per_axis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = alloc::vec![1.0];
    for a in per_axis {
        let mut next = Vec::with_capacity(out.len() * a.len());
        for v in &out {
            for w in a {
                next.push(v * w);
            }
        }
        out = next;
    }
    out
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    fn word(&mut self, w: u64) {
        for b in w.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::empirical::{phi_j, PartitionSystem};
use crate::error::{Error, Result};
use crate::foundation::{EvaluationGrid, GridFunction, Point};
use crate::generators::SamplePath;
use crate::rng::{lane, stream};

/// Lag weights of the truncated long-run covariance series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    /// `w_k = 1`.
    Flat,
    /// `w_k = 1 - k / (L + 1)`.
    #[default]
    Bartlett,
}

impl Taper {
    pub fn weight(self, k: usize, lag: usize) -> f64 {
        match self {
            Taper::Flat => 1.0,
            Taper::Bartlett => 1.0 - k as f64 / (lag as f64 + 1.0),
        }
    }
}

/// Pre-clip eigenvalues above `-PSD_TOLERANCE` are treated as round-off.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Gaussian field model on the vertices of a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitModel {
    pub grid: EvaluationGrid,
    pub lag: usize,
    pub taper: Taper,
    pub replicates: usize,
    pub n: usize,
    /// Plug-in estimate, row-major `V x V`, exactly symmetric.
    pub gamma_raw: Vec<f64>,
    /// After clipping negative eigenvalues at 0.
    pub gamma: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Largest clipped magnitude.
    pub psd_repair: f64,
    /// Lower-triangular `L` with `L L^T = gamma`, row-major.
    pub factor: Vec<f64>,
    /// `||L L^T - gamma||_F / ||gamma||_F`.
    pub factor_error: f64,
}

impl LimitModel {
    pub fn vertices(&self) -> usize {
        self.grid.vertex_count()
    }

    pub fn gamma_at(&self, a: usize, b: usize) -> f64 {
        self.gamma[a * self.vertices() + b]
    }
}

/// Default truncation `ceil(4 log n / |log theta|)`, capped at `n / 10`;
/// zero when no decay rate is available.
pub fn default_lag(n: usize, theta: Option<f64>) -> usize {
    let cap = n / 10;
    match theta {
        Some(t) if t > 0.0 && t < 1.0 => {
            let l = (4.0 * (n as f64).ln() / t.ln().abs()).ceil();
            if l.is_finite() {
                (l as usize).min(cap)
            } else {
                cap
            }
        }
        _ => 0,
    }
}

/// `c_0 + sum_{k=1}^L w_k (c_k + c_k^T)` of a vector-valued feature sequence,
/// averaged over replicates, with the pooled feature mean removed.
///
/// `feature(x, out)` writes the `v` features of one observation. Raw moments
/// are accumulated over the nonzero features only and centered at the end,
/// so every entry depends on its own two feature columns alone.
pub fn long_run_covariance(
    paths: &[SamplePath],
    v: usize,
    lag: usize,
    taper: Taper,
    feature: &dyn Fn(&[f64], &mut [f64]),
) -> Result<Vec<f64>> {
    if paths.is_empty() {
        return Err(Error::Empty("path ensemble"));
    }
    let n = paths[0].len();
    if paths.iter().any(|p| p.len() != n) {
        return Err(Error::InvalidArgument("paths must share one length".into()));
    }
    if lag >= n {
        return Err(Error::OutOfRange {
            what: "lag (must be below n)",
            value: lag as f64,
        });
    }
    let coef: Vec<f64> = (0..=lag)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                taper.weight(k, lag) / (n - k) as f64
            }
        })
        .collect();
    // Raw sums: z z^T, z, z y^T, c z, y and c, with y_i = sum_k coef_k z_{i+k}
    // and c_i = sum_k coef_k over the lags available at i.
    let mut zz = vec![0.0; v * v];
    let mut zsum = vec![0.0; v];
    let mut zy = vec![0.0; v * v];
    let mut czsum = vec![0.0; v];
    let mut ysum = vec![0.0; v];
    let mut csum = 0.0;
    let mut dense = vec![0.0; v];
    let mut y = vec![0.0; v];
    for p in paths {
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
        for x in p.rows() {
            feature(x, &mut dense);
            rows.push(
                dense
                    .iter()
                    .enumerate()
                    .filter(|(_, z)| **z != 0.0)
                    .map(|(c, z)| (c, *z))
                    .collect(),
            );
        }
        for i in 0..n {
            let zi = &rows[i];
            for &(s, a) in zi {
                zsum[s] += a;
                let row = &mut zz[s * v..(s + 1) * v];
                for &(t, b) in zi {
                    row[t] += a * b;
                }
            }
            if lag == 0 {
                continue;
            }
            let top = lag.min(n - 1 - i);
            if top == 0 {
                continue;
            }
            y.iter_mut().for_each(|e| *e = 0.0);
            let mut ci = 0.0;
            for k in 1..=top {
                ci += coef[k];
                for &(t, b) in &rows[i + k] {
                    y[t] += coef[k] * b;
                }
            }
            csum += ci;
            for t in 0..v {
                ysum[t] += y[t];
            }
            for &(s, a) in zi {
                czsum[s] += ci * a;
                let row = &mut zy[s * v..(s + 1) * v];
                for t in 0..v {
                    row[t] += a * y[t];
                }
            }
        }
    }
    let total = (n * paths.len()) as f64;
    let mean: Vec<f64> = zsum.iter().map(|z| z / total).collect();
    let mut cross = vec![0.0; v * v];
    for s in 0..v {
        for t in 0..v {
            cross[s * v + t] =
                zy[s * v + t] - mean[t] * czsum[s] - mean[s] * ysum[t] + mean[s] * mean[t] * csum;
        }
    }
    let r = paths.len() as f64;
    let mut gamma = vec![0.0; v * v];
    for s in 0..v {
        for t in s..v {
            let c0 = (zz[s * v + t] - mean[s] * zsum[t] - mean[t] * zsum[s]
                + total * mean[s] * mean[t])
                / n as f64;
            let g = (c0 + (cross[s * v + t] + cross[t * v + s])) / r;
            gamma[s * v + t] = g;
            gamma[t * v + s] = g;
        }
    }
    Ok(gamma)
}

/// Eigenvalue clipping and a lower-triangular square root.
///
/// The root comes from the LQ factorization of `Q sqrt(Lambda)`, which is
/// stable for singular matrices where a plain Cholesky breaks down.
pub fn psd_factor(gamma: &[f64], v: usize) -> Result<(Vec<f64>, f64, f64, Vec<f64>, f64)> {
    if gamma.len() != v * v {
        return Err(Error::DimensionMismatch {
            expected: v * v,
            found: gamma.len(),
        });
    }
    if v == 0 {
        return Ok((Vec::new(), 0.0, 0.0, Vec::new(), 0.0));
    }
    let m = DMatrix::from_row_slice(v, v, gamma);
    let eig = SymmetricEigen::new(m);
    let min_eigenvalue = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let psd_repair = (-min_eigenvalue).max(0.0);
    let mut b = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        b.column_mut(j).scale_mut(s);
    }
    let repaired = &b * b.transpose();
    let mut repaired_rows = vec![0.0; v * v];
    for i in 0..v {
        for j in 0..v {
            // Symmetrize to keep exact symmetry after round-off.
            repaired_rows[i * v + j] = 0.5 * (repaired[(i, j)] + repaired[(j, i)]);
        }
    }
    let qr = b.transpose().qr();
    let l = qr.r().transpose();
    let mut factor = vec![0.0; v * v];
    for i in 0..v {
        for j in 0..=i.min(l.ncols() - 1) {
            factor[i * v + j] = l[(i, j)];
        }
    }
    let mut err = 0.0;
    let mut norm = 0.0;
    for i in 0..v {
        for j in 0..v {
            let mut s = 0.0;
            for k in 0..v {
                s += factor[i * v + k] * factor[j * v + k];
            }
            let g = repaired_rows[i * v + j];
            err += (s - g) * (s - g);
            norm += g * g;
        }
    }
    let factor_error = if norm > 0.0 {
        (err / norm).sqrt()
    } else {
        err.sqrt()
    };
    Ok((
        repaired_rows,
        min_eigenvalue,
        psd_repair,
        factor,
        factor_error,
    ))
}

fn build(
    grid: &EvaluationGrid,
    paths: &[SamplePath],
    lag: usize,
    taper: Taper,
    gamma_raw: Vec<f64>,
) -> Result<LimitModel> {
    let v = grid.vertex_count();
    let (gamma, min_eigenvalue, psd_repair, factor, factor_error) = psd_factor(&gamma_raw, v)?;
    Ok(LimitModel {
        grid: grid.clone(),
        lag,
        taper,
        replicates: paths.len(),
        n: paths[0].len(),
        gamma_raw,
        gamma,
        min_eigenvalue,
        psd_repair,
        factor,
        factor_error,
    })
}

fn check_dims(paths: &[SamplePath], grid: &EvaluationGrid) -> Result<()> {
    if paths.is_empty() {
        return Err(Error::Empty("path ensemble"));
    }
    if let Some(p) = paths.iter().find(|p| p.dim() != grid.dimension()) {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// Plug-in `Gamma(s, t)` over the grid vertices from the indicators `1{X_i <= t}`.
pub fn estimate_gamma(
    paths: &[SamplePath],
    grid: &EvaluationGrid,
    lag: usize,
    taper: Taper,
) -> Result<LimitModel> {
    check_dims(paths, grid)?;
    let v = grid.vertex_count();
    let vertices: Vec<Vec<f64>> = (0..v).map(|f| grid.vertex_coords(f)).collect();
    let feature = |x: &[f64], out: &mut [f64]| {
        for (o, t) in out.iter_mut().zip(&vertices) {
            *o = if x.iter().zip(t).all(|(a, b)| a <= b) {
                1.0
            } else {
                0.0
            };
        }
    };
    let gamma_raw = long_run_covariance(paths, v, lag, taper, &feature)?;
    build(grid, paths, lag, taper, gamma_raw)
}

/// The same series with each indicator replaced by the kernel `phi_j` of the
/// cell holding the vertex; vertices below the partition get 0.
///
/// Approaches `estimate_gamma` as the partition is refined.
pub fn estimate_gamma_kernels(
    paths: &[SamplePath],
    grid: &EvaluationGrid,
    partition: &PartitionSystem,
    lag: usize,
    taper: Taper,
) -> Result<LimitModel> {
    check_dims(paths, grid)?;
    if partition.dimension() != grid.dimension() {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension(),
            found: partition.dimension(),
        });
    }
    let v = grid.vertex_count();
    let cells: Vec<Option<Vec<usize>>> = (0..v)
        .map(|f| {
            grid.vertex_coords(f)
                .iter()
                .enumerate()
                .map(|(i, t)| partition.cell_of(i, *t))
                .collect::<Option<Vec<usize>>>()
        })
        .collect();
    let feature = |x: &[f64], out: &mut [f64]| {
        for (o, c) in out.iter_mut().zip(&cells) {
            *o = c.as_ref().map_or(0.0, |j| phi_j(partition, j, x));
        }
    };
    let gamma_raw = long_run_covariance(paths, v, lag, taper, &feature)?;
    build(grid, paths, lag, taper, gamma_raw)
}

/// Long-run covariance of the indicators at arbitrary points.
pub fn gamma_at_points(
    paths: &[SamplePath],
    points: &[Point],
    lag: usize,
    taper: Taper,
) -> Result<Vec<f64>> {
    if let (Some(p), Some(t)) = (
        paths.first(),
        points.iter().find(|t| t.dim() != paths[0].dim()),
    ) {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: t.dim(),
        });
    }
    let feature = |x: &[f64], out: &mut [f64]| {
        for (o, t) in out.iter_mut().zip(points) {
            *o = if x.iter().zip(t.coords()).all(|(a, b)| a <= b) {
                1.0
            } else {
                0.0
            };
        }
    };
    long_run_covariance(paths, points.len(), lag, taper, &feature)
}

/// `count` independent draws `L z` with `z` standard normal; field `c`
/// uses its own stream, so fields can be drawn in any order.
pub fn sample_w(model: &LimitModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|c| sample_w_one(model, seed, c as u64))
        .collect()
}

pub fn sample_w_one(model: &LimitModel, seed: u64, index: u64) -> Vec<f64> {
    let v = model.vertices();
    let mut rng = stream(seed, index, lane::GAUSSIAN);
    let z: Vec<f64> = (0..v).map(|_| StandardNormal.sample(&mut rng)).collect();
    (0..v)
        .map(|i| (0..=i).map(|k| model.factor[i * v + k] * z[k]).sum())
        .collect()
}

/// One sampled field as a grid function.
pub fn sample_w_field(model: &LimitModel, seed: u64, index: u64) -> Result<GridFunction> {
    GridFunction::new(model.grid.clone(), sample_w_one(model, seed, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::IidUniform;

    #[test]
    fn lag_defaults() {
        assert_eq!(default_lag(1000, Some(0.5)), 40);
        assert_eq!(default_lag(100, Some(0.5)), 10);
        assert_eq!(default_lag(1000, None), 0);
    }

    #[test]
    fn degenerate_vertices_have_zero_rows() {
        let grid = EvaluationGrid::new(vec![vec![0.3, 0.6]]).unwrap();
        let paths: Vec<SamplePath> = (0..20)
            .map(|r| IidUniform::new(1).unwrap().simulate(200, 1, r).unwrap())
            .collect();
        let m = estimate_gamma(&paths, &grid, 2, Taper::Bartlett).unwrap();
        let v = m.vertices();
        for t in 0..v {
            assert_eq!(m.gamma_raw[t], 0.0);
            assert_eq!(m.gamma_raw[(v - 1) * v + t], 0.0);
        }
        assert!(m.factor_error < 1e-10);
    }

    #[test]
    fn factor_of_identity_and_zero() {
        let (g, min, clip, f, err) = psd_factor(&[1.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(g, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(min, 1.0);
        assert_eq!(clip, 0.0);
        assert_eq!(f[1], 0.0);
        assert!(err < 1e-15);
        let (_, _, _, f0, _) = psd_factor(&[0.0; 4], 2).unwrap();
        assert!(f0.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn clipping_records_magnitude() {
        let (g, min, clip, _, err) = psd_factor(&[1.0, 2.0, 2.0, 1.0], 2).unwrap();
        assert!((min + 1.0).abs() < 1e-12);
        assert!((clip - 1.0).abs() < 1e-12);
        assert!((g[0] - 1.5).abs() < 1e-12 && (g[1] - 1.5).abs() < 1e-12);
        assert!(err < 1e-10);
    }

    #[test]
    fn rejects_lag_at_least_n() {
        let grid = EvaluationGrid::new(vec![vec![0.5]]).unwrap();
        let paths = vec![IidUniform::new(1).unwrap().simulate(10, 1, 0).unwrap()];
        assert!(estimate_gamma(&paths, &grid, 10, Taper::Flat).is_err());
    }
}

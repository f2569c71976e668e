//! The piecewise-constant approximation `U_n^(m) = sqrt(n) (F_n^(m) - F^(m))`
//! built from the product kernels `phi_j`, and its distance to `U_n`.

use alloc::vec::Vec;

use num_traits::Float;
use serde::Serialize;

use super::field::EmpiricalProcessField;
use super::partition::PartitionSystem;
use crate::chaining::kernel::ramp;
use crate::error::{Error, Result};
use crate::foundation::counting::dominance_counts;
use crate::foundation::{DistributionModel, EvaluationGrid, GridFunction};
use crate::generators::SamplePath;

/// Cell values of `F_n^(m)`, `F^(m)` and `U_n^(m)`, row-major over the
/// 1-based cell multi-index `j in {1..m}^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseField {
    pub partition: PartitionSystem,
    pub n: usize,
    pub fn_m: Vec<f64>,
    pub f_m: Vec<f64>,
    /// Monte Carlo standard error of `f_m`; zero for analytic laws.
    pub f_m_stderr: Vec<f64>,
    pub un_m: Vec<f64>,
}

/// `phi_j` coordinate factor: zero unless `j >= 2`.
#[inline]
pub fn phi_factor(partition: &PartitionSystem, axis: usize, j: usize, x: f64) -> f64 {
    if j < 2 {
        return 0.0;
    }
    ramp(
        x,
        partition.t(axis, j as isize - 1),
        partition.t(axis, j as isize - 2),
    )
}

/// `phi_j(x) = prod_i phi((x_i - t_{i,j_i-1}) / |t_{i,j_i-1} - t_{i,j_i-2}|)` for `(2,...,2) <= j`, else 0.
pub fn phi_j(partition: &PartitionSystem, j: &[usize], x: &[f64]) -> f64 {
    let mut prod = 1.0;
    for (i, (&ji, &xi)) in j.iter().zip(x).enumerate() {
        prod *= phi_factor(partition, i, ji, xi);
    }
    prod
}

fn axis_factors(partition: &PartitionSystem, axis: usize, x: f64, out: &mut Vec<(usize, f64)>) {
    out.clear();
    for j in 2..=partition.m() {
        let f = phi_factor(partition, axis, j, x);
        if f != 0.0 {
            out.push((j, f));
        }
    }
}

/// Sums of `phi_j(x)` (and of its square) over the rows of `points`.
fn kernel_sums(points: &[f64], partition: &PartitionSystem, squares: bool) -> (Vec<f64>, Vec<f64>) {
    let d = partition.dimension();
    let m = partition.m();
    let cells = partition.cell_count();
    let mut sums = alloc::vec![0.0; cells];
    let mut sq = if squares {
        alloc::vec![0.0; cells]
    } else {
        Vec::new()
    };
    let mut lists: Vec<Vec<(usize, f64)>> = (0..d).map(|_| Vec::with_capacity(m)).collect();
    let mut pos = alloc::vec![0usize; d];
    for x in points.chunks_exact(d) {
        for i in 0..d {
            axis_factors(partition, i, x[i], &mut lists[i]);
        }
        if lists.iter().any(Vec::is_empty) {
            continue;
        }
        pos.iter_mut().for_each(|p| *p = 0);
        'cells: loop {
            let mut prod = 1.0;
            let mut flat = 0;
            for i in 0..d {
                let (j, f) = lists[i][pos[i]];
                prod *= f;
                flat = flat * m + (j - 1);
            }
            sums[flat] += prod;
            if squares {
                sq[flat] += prod * prod;
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    break 'cells;
                }
                axis -= 1;
                pos[axis] += 1;
                if pos[axis] < lists[axis].len() {
                    break;
                }
                pos[axis] = 0;
            }
        }
    }
    (sums, sq)
}

/// `E phi_j(X_0)` for every cell, with Monte Carlo standard errors for
/// calibration-based laws.
pub fn expected_kernels(
    partition: &PartitionSystem,
    model: &DistributionModel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !partition.matches(model) {
        return Err(Error::ModelMismatch);
    }
    let d = partition.dimension();
    let m = partition.m();
    if let Some(points) = model.calibration_points() {
        let n = (points.len() / d) as f64;
        let (sums, sq) = kernel_sums(points, partition, true);
        let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let se = means
            .iter()
            .zip(&sq)
            .map(|(mu, s2)| {
                if n > 1.0 {
                    ((s2 / n - mu * mu).max(0.0) / (n - 1.0)).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        return Ok((means, se));
    }
    let per_axis: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (1..=m)
                .map(|j| {
                    if j < 2 {
                        return 0.0;
                    }
                    let a = partition.t(i, j as isize - 1);
                    let g = a - partition.t(i, j as isize - 2);
                    if g == f64::INFINITY {
                        0.0
                    } else {
                        model.ramp_mean(i, a, g).unwrap_or(0.0)
                    }
                })
                .collect()
        })
        .collect();
    let means = crate::foundation::distribution::outer_product(&per_axis);
    Ok((means, alloc::vec![0.0; partition.cell_count()]))
}

/// Computes `F_n^(m)`, `F^(m)` and `U_n^(m)` on every cell of the partition.
pub fn approx_process(
    path: &SamplePath,
    partition: &PartitionSystem,
    model: &DistributionModel,
) -> Result<PiecewiseField> {
    if path.is_empty() {
        return Err(Error::Empty("sample path"));
    }
    if path.dim() != partition.dimension() {
        return Err(Error::DimensionMismatch {
            expected: partition.dimension(),
            found: path.dim(),
        });
    }
    let (f_m, f_m_stderr) = expected_kernels(partition, model)?;
    let n = path.len();
    let (sums, _) = kernel_sums(path.values(), partition, false);
    let fn_m: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let root = (n as f64).sqrt();
    let un_m = fn_m.iter().zip(&f_m).map(|(a, b)| root * (a - b)).collect();
    Ok(PiecewiseField {
        partition: partition.clone(),
        n,
        fn_m,
        f_m,
        f_m_stderr,
        un_m,
    })
}

impl PiecewiseField {
    /// Flat cell of `t`, or `None` below the covered region (where all values vanish).
    pub fn cell_of(&self, t: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for (i, &ti) in t.iter().enumerate() {
            let j = self.partition.cell_of(i, ti)?;
            flat = flat * self.partition.m() + (j - 1);
        }
        Some(flat)
    }

    pub fn un_at(&self, t: &[f64]) -> f64 {
        self.cell_of(t).map_or(0.0, |c| self.un_m[c])
    }

    pub fn fn_at(&self, t: &[f64]) -> f64 {
        self.cell_of(t).map_or(0.0, |c| self.fn_m[c])
    }

    pub fn f_at(&self, t: &[f64]) -> f64 {
        self.cell_of(t).map_or(0.0, |c| self.f_m[c])
    }

    /// The piecewise-constant field evaluated on the vertices of a grid.
    pub fn on_grid(&self, grid: &EvaluationGrid) -> Result<EmpiricalProcessField> {
        if grid.dimension() != self.partition.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.partition.dimension(),
                found: grid.dimension(),
            });
        }
        let fn_values = GridFunction::from_fn(grid.clone(), |t| self.fn_at(t))?;
        let f_values = GridFunction::from_fn(grid.clone(), |t| self.f_at(t))?;
        let un = GridFunction::from_fn(grid.clone(), |t| self.un_at(t))?;
        Ok(EmpiricalProcessField {
            n: self.n,
            fn_values,
            f_values,
            un,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxSandwichReport {
    pub checks: usize,
    pub violations: usize,
    /// Smallest of `F_n^(m) - F_n(t_{j-2})` and `F_n(t_{j-1}) - F_n^(m)` over all cells.
    pub worst_slack: f64,
}

/// Checks `F_n(t_{j-2}) <= F_n^(m)(t) <= F_n(t_{j-1})` on every cell, with `t_{-1} = -inf`.
pub fn check_approx_sandwich(
    path: &SamplePath,
    field: &PiecewiseField,
) -> Result<ApproxSandwichReport> {
    let p = &field.partition;
    let d = p.dimension();
    let m = p.m();
    if path.dim() != d || path.len() != field.n {
        return Err(Error::InvalidArgument(
            "path does not match the field".into(),
        ));
    }
    // Axis index k holds t_{k-1}, k = 0..=m.
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..=m).map(|k| p.t(i, k as isize - 1)).collect())
        .collect();
    let counts = dominance_counts(path.values(), d, &axes)?;
    let n = path.len() as f64;
    let mut report = ApproxSandwichReport {
        checks: 0,
        violations: 0,
        worst_slack: f64::INFINITY,
    };
    for cell in 0..p.cell_count() {
        let j = p.cell_multi(cell);
        // F_n(t_{j-2}) sits at axis index j-1 and F_n(t_{j-1}) at index j.
        let (mut lo, mut hi) = (0usize, 0usize);
        for i in 0..d {
            lo = lo * (m + 1) + (j[i] - 1);
            hi = hi * (m + 1) + j[i];
        }
        let lower = counts[lo] as f64 / n;
        let upper = counts[hi] as f64 / n;
        let mid = field.fn_m[cell];
        report.checks += 1;
        let slack = (mid - lower).min(upper - mid);
        report.worst_slack = report.worst_slack.min(slack);
        if slack < 0.0 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Largest vertex count examined by [`sup_deviations`].
pub const SUP_CANDIDATE_BUDGET: usize = 80_000_000;

/// Exact `sup_t |U_n(t) - U_n^(m)(t)|` for each field, for continuous `F`.
///
/// Both processes are constant in `t` up to the continuous part `F` on the
/// cells of the product grid of sample coordinates, breakpoints and `+-inf`,
/// so the supremum is attained at a lower cell corner or as the limit at an
/// upper corner. For calibration-based laws `F` is read off the same grid,
/// which makes the result an approximation.
pub fn sup_deviations(
    path: &SamplePath,
    model: &DistributionModel,
    fields: &[&PiecewiseField],
) -> Result<Vec<f64>> {
    let d = path.dim();
    if model.dimension() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: model.dimension(),
        });
    }
    for f in fields {
        if f.partition.dimension() != d || f.n != path.len() {
            return Err(Error::InvalidArgument(
                "field does not match the path".into(),
            ));
        }
        if !f.partition.matches(model) {
            return Err(Error::ModelMismatch);
        }
    }
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut a = path.column(i);
            for f in fields {
                a.extend_from_slice(f.partition.axis(i));
            }
            a.push(f64::NEG_INFINITY);
            a.push(f64::INFINITY);
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        })
        .collect();
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .unwrap_or(usize::MAX);
    if total > SUP_CANDIDATE_BUDGET {
        return Err(Error::Budget {
            required: total as u128,
            cap: SUP_CANDIDATE_BUDGET as u128,
        });
    }
    let mut strides = alloc::vec![1usize; d];
    for i in (0..d - 1).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    let diag: usize = strides.iter().sum();
    let counts = dominance_counts(path.values(), d, &axes)?;

    let marginal: Option<Vec<Vec<f64>>> = model.is_analytic().then(|| {
        axes.iter()
            .enumerate()
            .map(|(i, a)| a.iter().map(|x| model.marginal_cdf(i, *x)).collect())
            .collect()
    });
    let table = if marginal.is_none() {
        model.cdf_on_axes(&axes)?
    } else {
        Vec::new()
    };

    const NONE: usize = usize::MAX;
    // Per field and axis: offset of the cell containing the candidate (at / left limit).
    let offsets: Vec<(Vec<Vec<usize>>, Vec<Vec<usize>>)> = fields
        .iter()
        .map(|f| {
            let p = &f.partition;
            let m = p.m();
            let mut at = Vec::with_capacity(d);
            let mut left = Vec::with_capacity(d);
            for i in 0..d {
                let scale = m.pow((d - 1 - i) as u32);
                at.push(
                    axes[i]
                        .iter()
                        .map(|x| p.cell_of(i, *x).map_or(NONE, |j| (j - 1) * scale))
                        .collect(),
                );
                left.push(
                    axes[i]
                        .iter()
                        .map(|x| p.cell_of_left(i, *x).map_or(NONE, |j| (j - 1) * scale))
                        .collect(),
                );
            }
            (at, left)
        })
        .collect();

    let n = path.len() as f64;
    let root = n.sqrt();
    let mut best = alloc::vec![0.0f64; fields.len()];
    // The last axis runs contiguously; everything depending on the outer axes is
    // hoisted. Along it each field's approximation is constant on runs of
    // vertices, so only the extremes of U_n over each run matter.
    let last = d - 1;
    let inner = shape[last];
    let runs = |offs: &[usize]| {
        let mut out: Vec<(usize, usize, usize)> = Vec::new();
        for (j, &o) in offs.iter().enumerate() {
            match out.last_mut() {
                Some(r) if r.2 == o => r.1 = j + 1,
                _ => out.push((j, j + 1, o)),
            }
        }
        out
    };
    let last_runs: Vec<(Vec<(usize, usize, usize)>, Vec<(usize, usize, usize)>)> = offsets
        .iter()
        .map(|(at, left)| (runs(&at[last]), runs(&left[last])))
        .collect();
    let base_offset = |offs: &[Vec<usize>], outer: &[usize]| {
        let mut cell = 0usize;
        for (i, &k) in outer.iter().enumerate() {
            let o = offs[i][k];
            if o == NONE {
                return NONE;
            }
            cell += o;
        }
        cell
    };
    let extremes = |xs: &[f64]| {
        xs.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    };
    let mut outer = alloc::vec![0usize; last];
    let mut un_here = alloc::vec![0.0f64; inner];
    let mut un_left = alloc::vec![0.0f64; inner];
    for row in 0..total / inner {
        let outer_f: f64 = match &marginal {
            Some(mg) => outer.iter().enumerate().map(|(i, &k)| mg[i][k]).product(),
            None => 1.0,
        };
        let outer_left = outer.iter().all(|&k| k > 0);
        let base = row * inner;
        for j in 0..inner {
            let v = base + j;
            let f_here = match &marginal {
                Some(mg) => outer_f * mg[last][j],
                None => table[v],
            };
            un_here[j] = root * (counts[v] as f64 / n - f_here);
            if outer_left && j > 0 {
                let f_left = if marginal.is_some() {
                    f_here
                } else {
                    table[v - diag]
                };
                un_left[j] = root * (counts[v - diag] as f64 / n - f_left);
            }
        }
        for (k, f) in fields.iter().enumerate() {
            let (at, left) = &offsets[k];
            let (at_runs, left_runs) = &last_runs[k];
            let mut score =
                |base: usize, runs: &[(usize, usize, usize)], xs: &[f64], from: usize| {
                    for &(a, b, o) in runs {
                        let a = a.max(from);
                        if a >= b {
                            continue;
                        }
                        let c = if base == NONE || o == NONE {
                            0.0
                        } else {
                            f.un_m[base + o]
                        };
                        let (lo, hi) = extremes(&xs[a..b]);
                        best[k] = best[k].max(hi - c).max(c - lo);
                    }
                };
            score(base_offset(at, &outer), at_runs, &un_here, 0);
            if outer_left {
                score(base_offset(left, &outer), left_runs, &un_left, 1);
            }
        }
        for i in (0..last).rev() {
            outer[i] += 1;
            if outer[i] < shape[i] {
                break;
            }
            outer[i] = 0;
        }
    }
    Ok(best)
}

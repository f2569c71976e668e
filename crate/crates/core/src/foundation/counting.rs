//! Dominance counting on product grids: for every vertex `v`, the number of
//! points `x` with `x <= v` coordinate-wise. One pass to bucket the points and
//! one prefix-sum sweep per axis.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Index of the first axis value `>= x`, or `axis.len()` if there is none.
#[inline]
pub fn lower_bound(axis: &[f64], x: f64) -> usize {
    axis.partition_point(|v| *v < x)
}

/// Row-major table of dominance counts. `points` is row-major with `d` columns;
/// each axis must be sorted nondecreasingly.
pub fn dominance_counts(points: &[f64], d: usize, axes: &[Vec<f64>]) -> Result<Vec<u32>> {
    if axes.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: axes.len(),
        });
    }
    if d == 0 || points.len() % d != 0 || points.len() / d > u32::MAX as usize {
        return Err(Error::InvalidArgument(
            "point buffer is not a multiple of the dimension".into(),
        ));
    }
    let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
    if shape.iter().any(|&s| s == 0) {
        return Err(Error::InvalidGrid("empty axis".into()));
    }
    let total = shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;
    let mut strides = alloc::vec![1usize; d];
    for i in (0..d - 1).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    let mut table = alloc::vec![0u32; total];
    'points: for x in points.chunks_exact(d) {
        let mut flat = 0;
        for i in 0..d {
            let k = lower_bound(&axes[i], x[i]);
            if k == shape[i] {
                continue 'points;
            }
            flat += k * strides[i];
        }
        table[flat] += 1;
    }
    prefix_sum_all_axes(&mut table, &shape, &strides);
    Ok(table)
}

/// In-place inclusive prefix sums along every axis.
pub fn prefix_sum_all_axes(table: &mut [u32], shape: &[usize], strides: &[usize]) {
    for (&len, &stride) in shape.iter().zip(strides) {
        if len < 2 {
            continue;
        }
        // Add each slice along the axis onto the next one; both are contiguous runs of `stride`.
        for block in table.chunks_exact_mut(stride * len) {
            for k in 1..len {
                let (done, rest) = block.split_at_mut(k * stride);
                let prev = &done[(k - 1) * stride..];
                for (c, p) in rest[..stride].iter_mut().zip(prev) {
                    *c += *p;
                }
            }
        }
    }
}

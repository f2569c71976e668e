use num_traits::Float;

use crate::error::{Error, Result};
use crate::foundation::counting::dominance_counts;
use crate::foundation::{DistributionModel, EvaluationGrid, GridFunction};
use crate::generators::SamplePath;

/// `F_n`, `F` and `U_n = sqrt(n) (F_n - F)` on the vertices of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProcessField {
    pub n: usize,
    pub fn_values: GridFunction,
    pub f_values: GridFunction,
    pub un: GridFunction,
}

impl EmpiricalProcessField {
    pub fn grid(&self) -> &EvaluationGrid {
        self.un.grid()
    }
}

/// Exact empirical distribution function on every grid vertex.
pub fn empirical_cdf(path: &SamplePath, grid: &EvaluationGrid) -> Result<GridFunction> {
    if path.is_empty() {
        return Err(Error::Empty("sample path"));
    }
    if path.dim() != grid.dimension() {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension(),
            found: path.dim(),
        });
    }
    let counts = dominance_counts(path.values(), path.dim(), grid.axes())?;
    let n = path.len() as f64;
    GridFunction::new(
        grid.clone(),
        counts.into_iter().map(|c| c as f64 / n).collect(),
    )
}

pub fn empirical_process(
    path: &SamplePath,
    grid: &EvaluationGrid,
    model: &DistributionModel,
) -> Result<EmpiricalProcessField> {
    if model.dimension() != grid.dimension() {
        return Err(Error::DimensionMismatch {
            expected: grid.dimension(),
            found: model.dimension(),
        });
    }
    let fn_values = empirical_cdf(path, grid)?;
    let f_values = model.cdf_on_grid(grid)?;
    let root = (path.len() as f64).sqrt();
    let un = fn_values.zip_with(&f_values, |a, b| root * (a - b))?;
    Ok(EmpiricalProcessField {
        n: path.len(),
        fn_values,
        f_values,
        un,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_point_example() {
        let path = SamplePath::new(vec![0.2, 0.3, 0.6, 0.1], 2, "test", 0, 0).unwrap();
        let grid = EvaluationGrid::new(vec![vec![0.5], vec![0.5]]).unwrap();
        let model = DistributionModel::uniform_cube(2).unwrap();
        let f = empirical_process(&path, &grid, &model).unwrap();
        let k = grid.locate(&[0.5, 0.5]).unwrap();
        assert_eq!(f.fn_values.values()[k], 0.5);
        assert!((f.un.values()[k] - 2f64.sqrt() * 0.25).abs() < 1e-15);
        let top = grid.locate(&[f64::INFINITY, f64::INFINITY]).unwrap();
        assert_eq!(f.fn_values.values()[top], 1.0);
        assert_eq!(f.un.values()[top], 0.0);
        let low = grid.locate(&[f64::NEG_INFINITY, 0.5]).unwrap();
        assert_eq!(f.un.values()[low], 0.0);
    }
}

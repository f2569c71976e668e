//! Holder norms `sup|f| + sup |f(x) - f(y)| / |x - y|^alpha` (max-norm distance).

use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub value: f64,
    pub sup: f64,
    pub seminorm: f64,
    /// True when pairs were restricted to grid vertices, so `value` only
    /// bounds the norm from below.
    pub lower_bound: bool,
}

/// Largest number of vertex pairs examined by [`holder_norm`].
pub const PAIR_BUDGET: u128 = 200_000_000;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            what: "holder exponent",
            value: alpha,
        });
    }
    Ok(())
}

/// Holder norm of a grid function, over pairs of finite vertices. This is a
/// lower bound for the norm of any function interpolating the grid values.
pub fn holder_norm(f: &GridFunction, alpha: f64) -> Result<HolderEstimate> {
    check_alpha(alpha)?;
    let grid = f.grid();
    let d = grid.dimension();
    if (0..d).any(|i| grid.interior_count(i) < 2) {
        return Err(Error::InvalidGrid(
            "holder norm needs two finite vertices per axis".into(),
        ));
    }
    let finite: Vec<(Vec<f64>, f64)> = (0..grid.vertex_count())
        .filter_map(|k| {
            let c = grid.vertex_coords(k);
            c.iter().all(|v| v.is_finite()).then(|| (c, f.values()[k]))
        })
        .collect();
    let pairs = (finite.len() as u128) * (finite.len() as u128 - 1) / 2;
    if pairs > PAIR_BUDGET {
        return Err(Error::Budget {
            required: pairs,
            cap: PAIR_BUDGET,
        });
    }
    let mut seminorm = 0.0f64;
    for a in 0..finite.len() {
        for b in a + 1..finite.len() {
            let dist = finite[a]
                .0
                .iter()
                .zip(&finite[b].0)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let q = (finite[a].1 - finite[b].1).abs() / dist.powf(alpha);
            seminorm = seminorm.max(q);
        }
    }
    let sup = f.sup_abs();
    Ok(HolderEstimate {
        value: sup + seminorm,
        sup,
        seminorm,
        lower_bound: true,
    })
}

/// Functions whose sup norm and Holder seminorm are known in closed form.
pub trait HolderFunction {
    fn sup_norm(&self) -> f64;
    fn holder_seminorm(&self, alpha: f64) -> f64;

    fn holder_norm(&self, alpha: f64) -> Result<HolderEstimate> {
        check_alpha(alpha)?;
        let sup = self.sup_norm();
        let seminorm = self.holder_seminorm(alpha);
        Ok(HolderEstimate {
            value: sup + seminorm,
            sup,
            seminorm,
            lower_bound: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::foundation::grid::EvaluationGrid;

    #[test]
    fn identity_and_constant() {
        let g = EvaluationGrid::regular(1, 0.0, 1.0, 101).unwrap();
        let id = GridFunction::from_fn(g.clone(), |x| x[0].clamp(0.0, 1.0)).unwrap();
        let h = holder_norm(&id, 1.0).unwrap();
        assert!((h.value - 2.0).abs() < 1e-12);
        assert!(h.lower_bound);
        let c = GridFunction::from_fn(g, |_| -3.0).unwrap();
        assert_eq!(holder_norm(&c, 0.5).unwrap().value, 3.0);
    }

    #[test]
    fn rejects_degenerate_grid_and_alpha() {
        let g = EvaluationGrid::regular(1, 0.0, 1.0, 1).unwrap();
        let f = GridFunction::from_fn(g.clone(), |_| 0.0).unwrap();
        assert!(holder_norm(&f, 1.0).is_err());
        let g2 = EvaluationGrid::regular(1, 0.0, 1.0, 3).unwrap();
        let f2 = GridFunction::from_fn(g2, |_| 0.0).unwrap();
        assert!(holder_norm(&f2, 0.0).is_err());
        assert!(holder_norm(&f2, 1.5).is_err());
    }
}

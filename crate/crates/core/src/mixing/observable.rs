use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::chaining::ramp;
use crate::error::{Error, Result};
use crate::foundation::DistributionModel;
use crate::generators::{FiniteMarkovModel, SamplePath};
use crate::rng::{lane, stream};

/// Raw test functions on `R^d`, before centering and scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableKind {
    /// `cos(2 pi k x_axis)`.
    Cosine { axis: usize, frequency: u32 },
    /// `prod_i cos(2 pi k_i x_i)`.
    CosineProduct { frequencies: Vec<u32> },
    /// `tanh(x_axis)`: odd, bounded and 1-Lipschitz.
    Tanh { axis: usize },
    /// `prod_i ramp(x_i, s_i, s_prev_i)`, a Lipschitz bump below `s`.
    RampProduct { upper: Vec<f64>, lower: Vec<f64> },
    /// Value `values[k]` at the point `points[k]`; other points take the nearest one.
    StateTable {
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
}

impl ObservableKind {
    fn raw(&self, x: &[f64]) -> f64 {
        match self {
            Self::Cosine { axis, frequency } => (2.0 * PI * f64::from(*frequency) * x[*axis]).cos(),
            Self::CosineProduct { frequencies } => frequencies
                .iter()
                .zip(x)
                .map(|(k, xi)| (2.0 * PI * f64::from(*k) * xi).cos())
                .product(),
            Self::Tanh { axis } => x[*axis].tanh(),
            Self::RampProduct { upper, lower } => upper
                .iter()
                .zip(lower)
                .zip(x)
                .map(|((s, sp), xi)| ramp(*xi, *s, *sp))
                .product(),
            Self::StateTable { points, values } => {
                let mut best = (f64::INFINITY, 0.0);
                for (p, v) in points.iter().zip(values) {
                    let dist: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist == 0.0 {
                        return *v;
                    }
                    if dist < best.0 {
                        best = (dist, *v);
                    }
                }
                best.1
            }
        }
    }

    fn sup_bound(&self) -> f64 {
        match self {
            Self::StateTable { values, .. } => values.iter().fold(0.0, |a, v| a.max(v.abs())),
            _ => 1.0,
        }
    }

    /// Lipschitz constant for the max-norm, i.e. a bound on the l1 norm of the gradient.
    fn lipschitz(&self) -> Option<f64> {
        match self {
            Self::Cosine { frequency, .. } => Some(2.0 * PI * f64::from(*frequency)),
            Self::CosineProduct { frequencies } => {
                Some(2.0 * PI * frequencies.iter().map(|k| f64::from(*k)).sum::<f64>())
            }
            Self::Tanh { .. } => Some(1.0),
            Self::RampProduct { upper, lower } => {
                let mut total = 0.0;
                for (s, sp) in upper.iter().zip(lower) {
                    let g = s - sp;
                    if s.is_finite() && g.is_finite() {
                        total += 1.0 / g;
                    }
                }
                Some(total)
            }
            Self::StateTable { .. } => None,
        }
    }

    fn min_dimension(&self) -> usize {
        match self {
            Self::Cosine { axis, .. } | Self::Tanh { axis } => axis + 1,
            Self::CosineProduct { frequencies } => frequencies.len(),
            Self::RampProduct { upper, .. } => upper.len(),
            Self::StateTable { points, .. } => points.first().map_or(0, Vec::len),
        }
    }
}

/// A centered test function `f = (raw - center) * scale` with `||f||_inf <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub kind: ObservableKind,
    pub center: f64,
    pub scale: f64,
    /// Hölder exponent used for `holder_norm`.
    pub alpha: f64,
}

impl Observable {
    /// Centers at `center` and rescales so that the sup norm is at most 1.
    pub fn new(kind: ObservableKind, center: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::OutOfRange {
                what: "holder exponent",
                value: alpha,
            });
        }
        if !center.is_finite() {
            return Err(Error::OutOfRange {
                what: "center",
                value: center,
            });
        }
        match &kind {
            ObservableKind::CosineProduct { frequencies } if frequencies.is_empty() => {
                return Err(Error::Empty("cosine product frequencies"))
            }
            ObservableKind::RampProduct { upper, lower }
                if upper.len() != lower.len() || upper.is_empty() =>
            {
                return Err(Error::InvalidArgument(
                    "ramp product needs matching nonempty bounds".into(),
                ))
            }
            ObservableKind::RampProduct { upper, lower }
                if upper.iter().zip(lower).any(|(s, sp)| !(sp < s)) =>
            {
                return Err(Error::InvalidArgument(
                    "ramp product needs lower < upper".into(),
                ))
            }
            ObservableKind::StateTable { points, values }
                if points.len() != values.len() || points.is_empty() =>
            {
                return Err(Error::InvalidArgument(
                    "state table needs one value per point".into(),
                ))
            }
            _ => {}
        }
        let sup = kind.sup_bound() + center.abs();
        let scale = if sup > 1.0 { 1.0 / sup } else { 1.0 };
        Ok(Self {
            kind,
            center,
            scale,
            alpha,
        })
    }

    /// `cos(2 pi x_axis)`, exactly centered on the uniform cube and on the torus.
    pub fn cosine(axis: usize) -> Self {
        Self {
            kind: ObservableKind::Cosine { axis, frequency: 1 },
            center: 0.0,
            scale: 1.0,
            alpha: 1.0,
        }
    }

    /// `tanh(x_axis)`, exactly centered for laws symmetric about 0.
    pub fn odd_coordinate(axis: usize) -> Self {
        Self {
            kind: ObservableKind::Tanh { axis },
            center: 0.0,
            scale: 1.0,
            alpha: 1.0,
        }
    }

    /// State function of a finite chain, centered under its stationary law.
    pub fn markov_state(model: &FiniteMarkovModel, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.states() {
            return Err(Error::DimensionMismatch {
                expected: model.states(),
                found: values.len(),
            });
        }
        let center = values
            .iter()
            .zip(model.stationary())
            .map(|(v, p)| v * p)
            .sum();
        let points = (0..model.states())
            .map(|s| model.embedding(s).to_vec())
            .collect();
        Self::new(ObservableKind::StateTable { points, values }, center, 1.0)
    }

    /// Ramp bump centered with the exact per-axis means of an analytic product law.
    pub fn ramp_product(
        model: &DistributionModel,
        upper: Vec<f64>,
        lower: Vec<f64>,
    ) -> Result<Self> {
        if upper.len() != model.dimension() {
            return Err(Error::DimensionMismatch {
                expected: model.dimension(),
                found: upper.len(),
            });
        }
        let mut center = 1.0;
        for (axis, (s, sp)) in upper.iter().zip(&lower).enumerate() {
            let g = s - sp;
            let m = model.ramp_mean(axis, *s, g).ok_or_else(|| {
                Error::InvalidArgument(format!("no exact ramp mean on axis {axis}"))
            })?;
            center *= m;
        }
        Self::new(ObservableKind::RampProduct { upper, lower }, center, 1.0)
    }

    /// Same function, recentered at the Monte Carlo mean under `model`.
    pub fn centered_under(
        self,
        model: &DistributionModel,
        draws: usize,
        seed: u64,
    ) -> Result<Self> {
        if draws == 0 {
            return Err(Error::Empty("centering draws"));
        }
        self.check_dimension(model.dimension())?;
        let mut rng = stream(seed, 0, lane::MONTE_CARLO);
        let mut x = alloc::vec![0.0; model.dimension()];
        let mut sum = 0.0;
        for _ in 0..draws {
            model.sample_into(&mut rng, &mut x);
            sum += self.kind.raw(&x);
        }
        Self::new(self.kind, sum / draws as f64, self.alpha)
    }

    pub fn check_dimension(&self, d: usize) -> Result<()> {
        let need = self.kind.min_dimension();
        if need > d || matches!(self.kind, ObservableKind::StateTable { .. } if need != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: need,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.kind.raw(x) - self.center) * self.scale
    }

    /// Bound on `||f||_inf`, at most 1.
    pub fn sup_norm(&self) -> f64 {
        ((self.kind.sup_bound() + self.center.abs()) * self.scale).min(1.0)
    }

    /// Bound on the Hölder norm `||f||_inf + sup |f(x) - f(y)| / |x - y|^alpha`.
    ///
    /// Uses `|f(x) - f(y)| <= min(2 sup, L |x - y|) <= (2 sup)^(1 - alpha) L^alpha |x - y|^alpha`.
    /// `None` for functions that are not continuous.
    pub fn holder_norm(&self) -> Option<f64> {
        let sup = self.sup_norm();
        let lip = self.kind.lipschitz()? * self.scale;
        Some(sup + (2.0 * sup).powf(1.0 - self.alpha) * lip.powf(self.alpha))
    }

    /// Norm entering the moment bounds: the Hölder norm, or the sup norm
    /// for discontinuous state functions.
    pub fn norm(&self) -> f64 {
        self.holder_norm().unwrap_or_else(|| self.sup_norm())
    }

    /// `f(X_i)` for every row of every path.
    pub fn evaluate(&self, paths: &[SamplePath]) -> Result<Vec<Vec<f64>>> {
        paths
            .iter()
            .map(|p| {
                self.check_dimension(p.dim())?;
                Ok(p.rows().map(|x| self.eval(x)).collect())
            })
            .collect()
    }
}

/// `(mean |f(X_i)|^q)^(1/q)` over all evaluated values, with the Monte Carlo
/// mean and its standard error of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub r_norm: f64,
    pub q: f64,
    pub mean: f64,
    pub mean_stderr: f64,
    /// `|mean| <= 3 mean_stderr`.
    pub centered: bool,
}

/// Summary of evaluated values; the standard error uses replicate means.
pub fn summarize(values: &[Vec<f64>], q: f64) -> Result<ObservableSummary> {
    if !(q >= 1.0) {
        return Err(Error::OutOfRange {
            what: "q",
            value: q,
        });
    }
    let total: usize = values.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Empty("observable values"));
    }
    let sum_q: f64 = values.iter().flatten().map(|v| v.abs().powf(q)).sum();
    let r_norm = (sum_q / total as f64).powf(1.0 / q);
    let rep_means: Vec<f64> = values
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let mean = crate::stats::mean(&rep_means);
    let mean_stderr = if rep_means.len() > 1 {
        crate::stats::std_err(&rep_means)
    } else {
        f64::NAN
    };
    Ok(ObservableSummary {
        r_norm,
        q,
        mean,
        mean_stderr,
        centered: mean.abs() <= 3.0 * mean_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn markov_state_is_centered_and_scaled() {
        let m = FiniteMarkovModel::two_state(0.75).unwrap();
        let f = Observable::markov_state(&m, vec![1.0, -1.0]).unwrap();
        assert_eq!(f.center, 0.0);
        assert_eq!(f.eval(&[0.0]), 1.0);
        assert_eq!(f.eval(&[1.0]), -1.0);
        let g = Observable::markov_state(&m, vec![3.0, 1.0]).unwrap();
        assert_eq!(g.center, 2.0);
        assert!(g.sup_norm() <= 1.0);
        assert_eq!(g.eval(&[0.0]), 0.2);
    }

    #[test]
    fn ramp_product_exact_center() {
        let model = DistributionModel::uniform_cube(2).unwrap();
        let f = Observable::ramp_product(&model, vec![0.5, 0.5], vec![0.25, 0.25]).unwrap();
        assert!((f.center - 0.375 * 0.375).abs() < 1e-15);
        assert!(f.sup_norm() <= 1.0);
        assert!(f.holder_norm().unwrap() > 1.0);
    }

    #[test]
    fn holder_bound_of_cosine() {
        let f = Observable::cosine(0);
        assert!((f.holder_norm().unwrap() - (1.0 + 2.0 * PI)).abs() < 1e-12);
        let g = Observable { alpha: 0.5, ..f };
        assert!((g.holder_norm().unwrap() - (1.0 + 2f64.sqrt() * (2.0 * PI).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Observable::new(
            ObservableKind::CosineProduct {
                frequencies: vec![]
            },
            0.0,
            1.0
        )
        .is_err());
        assert!(Observable::new(ObservableKind::Tanh { axis: 0 }, 0.0, 0.0).is_err());
        assert!(Observable::cosine(2).check_dimension(2).is_err());
    }
}

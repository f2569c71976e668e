//! Grid-search estimate of the modulus of continuity of a multivariate CDF
//! under the max-norm, and the `(D, gamma)` fit of `omega(delta) ~ D |log delta|^-gamma`.

use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::distribution::DistributionModel;
use super::grid::Point;
use crate::error::{Error, Result};
use crate::stats::ols;

/// Fitted envelope `omega(delta) ~ d_hat * |log delta|^(-gamma_hat)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusFit {
    pub d_hat: f64,
    pub gamma_hat: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    /// `(delta, omega(delta))` in input order.
    pub pairs: Vec<(f64, f64)>,
    pub fit: Option<ModulusFit>,
}

/// Number of deltas, smallest first, entering the envelope fit.
pub const FIT_POINTS: usize = 10;

fn levels_per_axis(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 256,
        3 => 40,
        4 => 12,
        _ => 6,
    }
}

/// Estimates `omega_F(delta)` on the whole space.
pub fn modulus_of_continuity(model: &DistributionModel, deltas: &[f64]) -> Result<ModulusEstimate> {
    estimate(model, deltas, None)
}

/// Estimates `omega_F(delta)` with both points restricted to the box `[lo, hi]`.
pub fn modulus_on_region(
    model: &DistributionModel,
    deltas: &[f64],
    lo: &Point,
    hi: &Point,
) -> Result<ModulusEstimate> {
    let d = model.dimension();
    if lo.dim() != d || hi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: lo.dim().min(hi.dim()),
        });
    }
    if !lo.le(hi)
        || lo
            .coords()
            .iter()
            .chain(hi.coords())
            .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidArgument(
            "region must be a finite box with lo <= hi".into(),
        ));
    }
    estimate(model, deltas, Some((lo, hi)))
}

fn estimate(
    model: &DistributionModel,
    deltas: &[f64],
    region: Option<(&Point, &Point)>,
) -> Result<ModulusEstimate> {
    if deltas.is_empty() {
        return Err(Error::Empty("deltas"));
    }
    if let Some(bad) = deltas.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: *bad,
        });
    }
    let d = model.dimension();
    let g = levels_per_axis(d);
    let base: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut c: Vec<f64> = Vec::with_capacity(g + 2);
            for k in 0..g {
                if let Ok(q) = model.quantile(i, k as f64 / g as f64) {
                    if q.is_finite() {
                        c.push(q);
                    }
                }
            }
            let (slo, shi) = model.marginal_support(i);
            for v in [slo, shi] {
                if v.is_finite() {
                    c.push(v);
                }
            }
            if let Some((lo, hi)) = region {
                let (a, b) = (lo.coords()[i], hi.coords()[i]);
                for k in 0..g {
                    c.push(a + (b - a) * k as f64 / (g - 1) as f64);
                }
            }
            c
        })
        .collect();

    let mut pairs = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let step = delta * (1.0 - 1e-12);
        let mut lower: Vec<Vec<f64>> = Vec::with_capacity(d);
        let mut upper: Vec<Vec<f64>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut s: Vec<f64> = base[i].iter().flat_map(|&c| [c, c - delta]).collect();
            if let Some((lo, hi)) = region {
                let (a, b) = (lo.coords()[i], hi.coords()[i]);
                let top = (b - delta).max(a);
                s.retain(|v| *v >= a && *v <= top);
                if s.is_empty() {
                    s.push(a);
                }
            }
            s.sort_by(f64::total_cmp);
            s.dedup();
            let t: Vec<f64> = match region {
                Some((_, hi)) => s.iter().map(|v| (v + step).min(hi.coords()[i])).collect(),
                None => s.iter().map(|v| v + step).collect(),
            };
            lower.push(s);
            upper.push(t);
        }
        let fl = model.cdf_on_axes(&lower)?;
        let fu = model.cdf_on_axes(&upper)?;
        let omega = fl.iter().zip(&fu).fold(0.0f64, |m, (a, b)| m.max(b - a));
        pairs.push((delta, omega));
    }
    // Enforce monotonicity in delta: a larger delta admits every smaller pair.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0));
    let mut running = 0.0f64;
    for &k in &order {
        running = running.max(pairs[k].1);
        pairs[k].1 = running;
    }
    let fit = fit_envelope(&pairs);
    Ok(ModulusEstimate { pairs, fit })
}

/// Least squares of `log omega` on `log|log delta|` over the smallest deltas.
pub fn fit_envelope(pairs: &[(f64, f64)]) -> Option<ModulusFit> {
    let mut usable: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|(dl, w)| *dl < 1.0 && *w > 0.0)
        .collect();
    usable.sort_by(|a, b| a.0.total_cmp(&b.0));
    usable.dedup_by(|a, b| a.0 == b.0);
    usable.truncate(FIT_POINTS);
    if usable.len() < 2 {
        return None;
    }
    let x: Vec<f64> = usable.iter().map(|(dl, _)| (-dl.ln()).ln()).collect();
    let y: Vec<f64> = usable.iter().map(|(_, w)| w.ln()).collect();
    let line = ols(&x, &y).ok()?;
    Some(ModulusFit {
        d_hat: line.intercept.exp(),
        gamma_hat: -line.slope,
        points_used: usable.len(),
    })
}

impl DistributionModel {
    /// Estimates the modulus on `deltas` and stores the fitted envelope.
    pub fn fit_modulus(self, deltas: &[f64]) -> Result<(Self, ModulusEstimate)> {
        let est = modulus_of_continuity(&self, deltas)?;
        let fit = est.fit;
        Ok((self.with_modulus_fit(fit), est))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_line_and_square() {
        let m1 = DistributionModel::uniform_cube(1).unwrap();
        let e = modulus_of_continuity(&m1, &[0.1]).unwrap();
        assert!((e.pairs[0].1 - 0.1).abs() < 1e-9);
        let m2 = DistributionModel::uniform_cube(2).unwrap();
        let e = modulus_of_continuity(&m2, &[0.1]).unwrap();
        assert!((e.pairs[0].1 - 0.19).abs() < 1e-9, "{}", e.pairs[0].1);
    }

    #[test]
    fn flat_region_has_zero_modulus() {
        let m = DistributionModel::uniform_cube(2).unwrap();
        let lo = Point::new(alloc::vec![5.0, 5.0]).unwrap();
        let hi = Point::new(alloc::vec![10.0, 10.0]).unwrap();
        let e = modulus_on_region(&m, &[0.01, 0.5, 2.0], &lo, &hi).unwrap();
        assert!(e.pairs.iter().all(|p| p.1 == 0.0));
    }

    #[test]
    fn rejects_bad_deltas() {
        let m = DistributionModel::uniform_cube(1).unwrap();
        assert!(modulus_of_continuity(&m, &[]).is_err());
        assert!(modulus_of_continuity(&m, &[0.0]).is_err());
        assert!(modulus_of_continuity(&m, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn envelope_fit_recovers_planted_law() {
        let pairs: Vec<(f64, f64)> = (1..=10)
            .map(|k| {
                let dl = 10f64.powi(-k);
                (dl, 0.7 * (-dl.ln()).powf(-1.5))
            })
            .collect();
        let f = fit_envelope(&pairs).unwrap();
        assert!((f.gamma_hat - 1.5).abs() < 1e-9);
        assert!((f.d_hat - 0.7).abs() < 1e-9);
    }
}

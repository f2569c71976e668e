use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foundation::{DistributionModel, Point};
use crate::generators::SamplePath;
use crate::stats::{
    anderson_darling, anderson_darling_pvalue, ks_pvalue, ks_uniform, mean, normal_cdf, variance,
};

/// `U_n(t) = sqrt(n) (F_n(t) - F(t))` of one path at each point.
pub fn process_at_points(
    path: &SamplePath,
    model: &DistributionModel,
    points: &[Point],
) -> Result<Vec<f64>> {
    let n = path.len() as f64;
    points
        .iter()
        .map(|t| {
            if t.dim() != path.dim() {
                return Err(Error::DimensionMismatch {
                    expected: path.dim(),
                    found: t.dim(),
                });
            }
            let count = path
                .rows()
                .filter(|x| x.iter().zip(t.coords()).all(|(a, b)| a <= b))
                .count();
            Ok(n.sqrt() * (count as f64 / n - model.cdf(t)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionResult {
    pub direction: Vec<f64>,
    /// `a^T Gamma a`.
    pub target_variance: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub variance_ratio: Option<f64>,
    pub anderson_darling: Option<f64>,
    pub ad_pvalue: Option<f64>,
    pub ks: Option<f64>,
    pub ks_pvalue: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidiReport {
    pub replicates: usize,
    pub points: Vec<Vec<f64>>,
    pub results: Vec<DirectionResult>,
    pub level: f64,
    /// `level / tested directions`.
    pub bonferroni_level: f64,
    /// Every tested direction has an Anderson-Darling p-value above the Bonferroni level.
    pub pass: bool,
}

/// Directions with `a^T Gamma a` at most this fraction of `|a|^2 max diag` are skipped.
pub const DEGENERATE_TOL: f64 = 1e-12;
pub const MIN_FIDI_REPLICATES: usize = 500;

/// Normality of `a . (U_n(t_1), .., U_n(t_k))` across replicates against
/// `N(0, a^T Gamma a)`, for each direction `a`.
pub fn fidi_normality(
    samples: &[Vec<f64>],
    points: &[Point],
    directions: &[Vec<f64>],
    gamma: &[f64],
    level: f64,
) -> Result<FidiReport> {
    let k = points.len();
    if samples.len() < MIN_FIDI_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "fidi normality needs at least {MIN_FIDI_REPLICATES} replicates, got {}",
            samples.len()
        )));
    }
    if gamma.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            found: gamma.len(),
        });
    }
    if let Some(s) = samples.iter().find(|s| s.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: s.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::OutOfRange {
            what: "level",
            value: level,
        });
    }
    let max_diag = (0..k).map(|i| gamma[i * k + i]).fold(0.0, f64::max);
    let mut results = Vec::with_capacity(directions.len());
    for a in directions {
        if a.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: a.len(),
            });
        }
        let mut target = 0.0;
        for i in 0..k {
            for j in 0..k {
                target += a[i] * gamma[i * k + j] * a[j];
            }
        }
        let y: Vec<f64> = samples
            .iter()
            .map(|s| s.iter().zip(a).map(|(u, w)| u * w).sum())
            .collect();
        let sample_mean = mean(&y);
        let sample_variance = variance(&y);
        let a2: f64 = a.iter().map(|w| w * w).sum();
        let mut res = DirectionResult {
            direction: a.clone(),
            target_variance: target,
            sample_mean,
            sample_variance,
            variance_ratio: None,
            anderson_darling: None,
            ad_pvalue: None,
            ks: None,
            ks_pvalue: None,
            skipped: None,
        };
        if !(target > DEGENERATE_TOL * a2 * max_diag.max(f64::MIN_POSITIVE)) {
            res.skipped = Some(String::from(
                "degenerate direction: a^T Gamma a is numerically zero",
            ));
            results.push(res);
            continue;
        }
        let sd = target.sqrt();
        let pit: Vec<f64> = y.iter().map(|v| normal_cdf(v / sd)).collect();
        let ad = anderson_darling(&pit)?;
        let ks = ks_uniform(&pit)?;
        res.variance_ratio = Some(sample_variance / target);
        res.anderson_darling = Some(ad);
        res.ad_pvalue = Some(anderson_darling_pvalue(ad));
        res.ks = Some(ks);
        res.ks_pvalue = Some(ks_pvalue(ks, y.len() as f64));
        results.push(res);
    }
    let tested = results.iter().filter(|r| r.skipped.is_none()).count();
    let bonferroni_level = level / tested.max(1) as f64;
    let pass = results
        .iter()
        .filter_map(|r| r.ad_pvalue)
        .all(|p| p > bonferroni_level);
    Ok(FidiReport {
        replicates: samples.len(),
        points: points.iter().map(|p| p.coords().to_vec()).collect(),
        results,
        level,
        bonferroni_level,
        pass,
    })
}

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::wls;

/// Gap pattern of a block covariance
/// `Cov(f(X_0) f(X_{i_1*}) .. f(X_{i_{q-1}*}), f(X_{i_q*}) .. f(X_{i_p*}))`,
/// where `a* = i_1 + .. + i_a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    /// `(i_1, .., i_{q-1})`.
    pub left: Vec<usize>,
    /// `i_q`.
    pub gap: usize,
    /// `(i_{q+1}, .., i_p)`.
    pub right: Vec<usize>,
}

impl BlockSpec {
    /// `Cov(f(X_0), f(X_gap))`.
    pub fn pair(gap: usize) -> Self {
        Self {
            left: Vec::new(),
            gap,
            right: Vec::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.left.len() + 1 + self.right.len()
    }

    pub fn q(&self) -> usize {
        self.left.len() + 1
    }

    /// Offsets `(0, i_1*, .., i_p*)`; the first `q` belong to the left block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.p() + 1);
        let mut acc = 0usize;
        out.push(0);
        for i in self
            .left
            .iter()
            .chain(core::iter::once(&self.gap))
            .chain(&self.right)
        {
            acc += i;
            out.push(acc);
        }
        out
    }

    /// `i_p*`.
    pub fn span(&self) -> usize {
        self.left.iter().chain(&self.right).sum::<usize>() + self.gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Block covariance from evaluated paths `values[r][i] = f(X_i)` of replicate `r`.
///
/// Every start position `s` with `s + i_p* < n` contributes, which is valid
/// under stationarity. The standard error is the replicate-level influence
/// standard error, so within-path dependence is accounted for.
pub fn block_covariance(values: &[Vec<f64>], spec: &BlockSpec) -> Result<Estimate> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(
            "block covariance needs at least two replicates".into(),
        ));
    }
    let offsets = spec.offsets();
    let span = spec.span();
    let q = spec.q();
    let n = values.iter().map(Vec::len).min().unwrap_or(0);
    if span >= n {
        return Err(Error::IndexOutOfRange(format!(
            "i_p* = {span} does not fit in paths of length {n}"
        )));
    }
    let windows = n - span;
    let mut per_rep = Vec::with_capacity(values.len());
    for v in values {
        let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
        for s in 0..windows {
            let a: f64 = offsets[..q].iter().map(|o| v[s + o]).product();
            let b: f64 = offsets[q..].iter().map(|o| v[s + o]).product();
            sa += a;
            sb += b;
            sab += a * b;
        }
        let w = windows as f64;
        per_rep.push((sa / w, sb / w, sab / w));
    }
    let r = per_rep.len() as f64;
    let ma = per_rep.iter().map(|t| t.0).sum::<f64>() / r;
    let mb = per_rep.iter().map(|t| t.1).sum::<f64>() / r;
    let mab = per_rep.iter().map(|t| t.2).sum::<f64>() / r;
    let estimate = mab - ma * mb;
    let infl: Vec<f64> = per_rep
        .iter()
        .map(|(a, b, ab)| ab - mb * a - ma * b)
        .collect();
    Ok(Estimate {
        estimate,
        stderr: crate::stats::std_err(&infl),
    })
}

/// Covariances `Cov(f(X_0), f(X_k))` for each gap `k`.
pub fn lag_covariances(values: &[Vec<f64>], gaps: &[usize]) -> Result<Vec<Estimate>> {
    gaps.iter()
        .map(|g| block_covariance(values, &BlockSpec::pair(*g)))
        .collect()
}

/// Degree of the polynomial prefactor `P(k) ~ k^deg` in the envelope fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "degree")]
pub enum DegreeChoice {
    /// Known degree, e.g. the Jordan exponent of a torus automorphism.
    Fixed(u32),
    /// Best of `0, 1, 2` by residual sum of squares.
    Select,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingStatus {
    Fitted,
    /// No covariance is distinguishable from 0 at 3 standard errors.
    BelowNoiseFloor,
    /// Fewer than two gaps carry signal.
    InsufficientSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub gaps: Vec<usize>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub status: MixingStatus,
    /// Gaps entering the fit (|c| > 3 stderr).
    pub used: Vec<usize>,
    pub degree: Option<u32>,
    pub log_c: Option<f64>,
    pub theta: Option<f64>,
    /// 95% interval for `theta`.
    pub theta_ci: Option<(f64, f64)>,
    pub residual_ss: Option<f64>,
    /// `theta < 1` with the interval excluding 1.
    pub decays: bool,
    /// Free-form description of the block pattern.
    pub pattern: String,
}

/// Minimum number of gaps for an envelope fit.
pub const MIN_GAPS: usize = 6;

/// Fits `log|c_k| = log C + deg * ln k + k ln theta` by weighted least squares
/// on the gaps whose covariance clears 3 standard errors.
pub fn fit_mixing_envelope(
    gaps: &[usize],
    covs: &[Estimate],
    degree: DegreeChoice,
) -> Result<MixingReport> {
    if gaps.len() != covs.len() {
        return Err(Error::DimensionMismatch {
            expected: gaps.len(),
            found: covs.len(),
        });
    }
    if gaps.len() < MIN_GAPS {
        return Err(Error::InvalidArgument(format!(
            "envelope fit needs at least {MIN_GAPS} gaps"
        )));
    }
    let mut report = MixingReport {
        gaps: gaps.to_vec(),
        estimates: covs.iter().map(|c| c.estimate).collect(),
        stderrs: covs.iter().map(|c| c.stderr).collect(),
        status: MixingStatus::BelowNoiseFloor,
        used: Vec::new(),
        degree: None,
        log_c: None,
        theta: None,
        theta_ci: None,
        residual_ss: None,
        decays: false,
        pattern: String::from("pair"),
    };
    let signal = |c: &Estimate| c.estimate.abs() > 3.0 * c.stderr && c.estimate != 0.0;
    let idx: Vec<usize> = (0..gaps.len()).filter(|&i| signal(&covs[i])).collect();
    if idx.is_empty() {
        return Ok(report);
    }
    report.used = idx.iter().map(|&i| gaps[i]).collect();
    if idx.len() < 2 {
        report.status = MixingStatus::InsufficientSignal;
        return Ok(report);
    }
    let x: Vec<f64> = idx.iter().map(|&i| gaps[i] as f64).collect();
    let noiseless = idx.iter().all(|&i| covs[i].stderr == 0.0);
    let w: Vec<f64> = idx
        .iter()
        .map(|&i| {
            if noiseless {
                1.0
            } else {
                (covs[i].estimate / covs[i].stderr.max(f64::MIN_POSITIVE)).powi(2)
            }
        })
        .collect();
    let candidates: Vec<u32> = match degree {
        DegreeChoice::Fixed(r) => alloc::vec![r],
        DegreeChoice::Select => alloc::vec![0, 1, 2],
    };
    let mut best: Option<(u32, crate::stats::LineFit)> = None;
    for deg in candidates {
        let y: Vec<f64> = idx
            .iter()
            .map(|&i| covs[i].estimate.abs().ln() - f64::from(deg) * (gaps[i].max(1) as f64).ln())
            .collect();
        let fit = wls(&x, &y, &w)?;
        let better = match &best {
            None => true,
            Some((_, b)) => fit.residual_ss < b.residual_ss * (1.0 - 1e-9),
        };
        if better {
            best = Some((deg, fit));
        }
    }
    let (deg, fit) = best.expect("at least one candidate degree");
    // With real inverse-variance weights the slope variance is at least 1/Sxx.
    let mut se = fit.slope_se;
    if !noiseless {
        let sw: f64 = w.iter().sum();
        let xm = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - xm) * (a - xm)).sum();
        se = se.max((1.0 / sxx).sqrt());
    }
    let theta = fit.slope.exp();
    let ci = ((fit.slope - 1.96 * se).exp(), (fit.slope + 1.96 * se).exp());
    report.status = MixingStatus::Fitted;
    report.degree = Some(deg);
    report.log_c = Some(fit.intercept);
    report.theta = Some(theta);
    report.theta_ci = Some(ci);
    report.residual_ss = Some(fit.residual_ss);
    report.decays = theta < 1.0 && ci.1 < 1.0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn offsets_are_cumulative() {
        let s = BlockSpec {
            left: vec![2, 1],
            gap: 3,
            right: vec![4],
        };
        assert_eq!(s.offsets(), vec![0, 2, 3, 6, 10]);
        assert_eq!(s.p(), 4);
        assert_eq!(s.q(), 3);
        assert_eq!(s.span(), 10);
    }

    #[test]
    fn gap_zero_is_variance() {
        let values = vec![vec![1.0, -1.0, 1.0, -1.0], vec![1.0, 1.0, -1.0, -1.0]];
        let c = block_covariance(&values, &BlockSpec::pair(0)).unwrap();
        assert_eq!(c.estimate, 1.0);
        assert!(block_covariance(&values, &BlockSpec::pair(4)).is_err());
    }

    #[test]
    fn synthetic_geometric_fit() {
        let gaps: Vec<usize> = (1..=10).collect();
        let covs: Vec<Estimate> = gaps
            .iter()
            .map(|k| Estimate {
                estimate: 0.5f64.powi(*k as i32),
                stderr: 0.0,
            })
            .collect();
        let r = fit_mixing_envelope(&gaps, &covs, DegreeChoice::Select).unwrap();
        assert_eq!(r.status, MixingStatus::Fitted);
        assert_eq!(r.degree, Some(0));
        assert!((r.theta.unwrap() - 0.5).abs() < 1e-12);
        assert!(r.decays);
    }

    #[test]
    fn noise_only_is_below_floor() {
        let gaps: Vec<usize> = (1..=8).collect();
        let covs: Vec<Estimate> = gaps
            .iter()
            .map(|_| Estimate {
                estimate: 1e-3,
                stderr: 1e-2,
            })
            .collect();
        let r = fit_mixing_envelope(&gaps, &covs, DegreeChoice::Select).unwrap();
        assert_eq!(r.status, MixingStatus::BelowNoiseFloor);
        assert!(r.theta.is_none());
        assert!(fit_mixing_envelope(&gaps[..5], &covs[..5], DegreeChoice::Select).is_err());
    }
}

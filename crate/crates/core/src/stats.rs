//! Small statistical toolkit: moments, least squares, the normal law and the
//! Anderson-Darling / Kolmogorov-Smirnov goodness-of-fit statistics.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; NaN for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_err(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Result of a straight-line least-squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub residual_ss: f64,
    pub points: usize,
}

/// Ordinary least squares.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let w = alloc::vec![1.0; x.len()];
    wls(x, y, &w)
}

/// Weighted least squares with weights proportional to inverse variances.
///
/// Standard errors use the residual scale when more than two points are
/// present, so they remain meaningful when the weights are only relative.
pub fn wls(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len().min(w.len()),
        });
    }
    if x.len() < 2 {
        return Err(Error::Empty(
            "at least two points are needed for a line fit",
        ));
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - xm) * (x[i] - xm);
        sxy += w[i] * (x[i] - xm) * (y[i] - ym);
    }
    if sxx <= 0.0 {
        return Err(Error::Numerical("degenerate abscissae in line fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut rss = 0.0;
    for i in 0..x.len() {
        let r = y[i] - intercept - slope * x[i];
        rss += w[i] * r * r;
    }
    let n = x.len();
    let sigma2 = if n > 2 { rss / (n - 2) as f64 } else { 0.0 };
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / sw + xm * xm / sxx)).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        residual_ss: rss,
        points: n,
    })
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * core::f64::consts::PI).sqrt()
}

/// Standard normal distribution function, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal quantile by bisection on the distribution function.
/// Returns -inf at 0 and +inf at 1.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Anderson-Darling statistic of probability-integral-transformed values
/// against the uniform law. Values are clamped away from 0 and 1.
pub fn anderson_darling(pit: &[f64]) -> Result<f64> {
    if pit.is_empty() {
        return Err(Error::Empty("anderson-darling sample"));
    }
    let mut u: Vec<f64> = pit.iter().map(|v| v.clamp(1e-300, 1.0 - 1e-16)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len();
    let nf = n as f64;
    let mut s = 0.0;
    for i in 0..n {
        let k = (2 * i + 1) as f64;
        s += k * (u[i].ln() + (1.0 - u[n - 1 - i]).ln());
    }
    Ok(-nf - s / nf)
}

/// Upper tail probability of the asymptotic Anderson-Darling law for a fully
/// specified null (Marsaglia and Marsaglia's ADinf approximation).
pub fn anderson_darling_pvalue(a2: f64) -> f64 {
    if a2 <= 0.0 {
        return 1.0;
    }
    let z = a2;
    let cdf = if z < 2.0 {
        (-1.2337141 / z).exp() / z.sqrt()
            * (2.00012
                + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z)
                    * z)
    } else {
        (-(1.0776
            - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z)
            .exp())
        .exp()
    };
    (1.0 - cdf).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov distance of PIT values to the uniform law.
pub fn ks_uniform(pit: &[f64]) -> Result<f64> {
    if pit.is_empty() {
        return Err(Error::Empty("kolmogorov-smirnov sample"));
    }
    let mut u: Vec<f64> = pit.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in u.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(hi - v).max(v - lo);
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("kolmogorov-smirnov sample"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = if x[i] <= y[j] { x[i] } else { y[j] };
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov tail `Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2)`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value of a KS distance with effective sample size `n_eff`
/// (Stephens' small-sample correction).
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// Median of a slice (average of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-10, 0.01, 0.3, 0.5, 0.975, 1.0 - 1e-9] {
            assert_relative_eq!(normal_cdf(normal_quantile(p)), p, max_relative = 1e-9);
        }
        assert_relative_eq!(normal_quantile(0.975), 1.959963984540054, epsilon = 1e-12);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = ols(&x, &y).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-14);
        assert_relative_eq!(f.intercept, 1.0, epsilon = 1e-14);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn ad_pvalue_matches_tabulated_quantiles() {
        // Asymptotic upper 5% and 1% points of the case-0 law.
        assert!((anderson_darling_pvalue(2.492) - 0.05).abs() < 1e-3);
        assert!((anderson_darling_pvalue(3.857) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn kolmogorov_tail_known_point() {
        // Q(1.358) is the classical 5% point.
        assert!((kolmogorov_tail(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn two_sample_ks_of_identical_samples_is_zero() {
        let a = [0.3, 0.1, 0.7];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0], &[1.0]).unwrap(), 1.0);
    }
}

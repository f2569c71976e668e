use alloc::vec::Vec;

use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};

/// Depth `K` and the split `eps_k = eps / (4 k (k + 1))`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub k: u32,
    pub epsilons: Vec<f64>,
    /// `d sqrt(n) h / eps`.
    pub ratio: f64,
    /// True when the formula gave `K < 1`.
    pub clamped: bool,
    /// False when `ratio < 1`, where the window is not guaranteed and is not checked.
    pub window_checked: bool,
    /// `eps/16 <= d sqrt(n) h / 2^K <= eps/8`.
    pub window_ok: bool,
    pub eps_sum: f64,
}

impl Schedule {
    pub fn warning(&self) -> Option<&'static str> {
        if !self.window_checked {
            Some("d*sqrt(n)*h < eps: K clamped to at least 1 and the window check skipped")
        } else {
            None
        }
    }
}

/// `K = 4 + floor(log2(d sqrt(n) h / eps))`, at least 1.
///
/// The floor is taken on the ratio and then nudged by one when rounding put
/// `d sqrt(n) h` on the wrong side of a window edge, so the window
/// `eps/16 <= d sqrt(n) h / 2^K <= eps/8` holds exactly in floating point.
pub fn schedule(n: usize, h: f64, epsilon: f64, d: usize) -> Result<Schedule> {
    if n == 0 {
        return Err(Error::OutOfRange {
            what: "n",
            value: 0.0,
        });
    }
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "d",
            value: 0.0,
        });
    }
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::OutOfRange {
            what: "h",
            value: h,
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange {
            what: "epsilon",
            value: epsilon,
        });
    }
    let scale = d as f64 * (n as f64).sqrt() * h;
    let ratio = scale / epsilon;
    let mut k = 4 + ratio.log2().floor() as i64;
    let window_checked = ratio >= 1.0;
    if window_checked {
        let window = |k: i64| scale / 2f64.powi(k as i32);
        while window(k) < epsilon / 16.0 {
            k -= 1;
        }
        while window(k) > epsilon / 8.0 {
            k += 1;
        }
    }
    let clamped = k < 1;
    let k = k.max(1) as u32;
    let w = scale / 2f64.powi(k as i32);
    let window_ok = epsilon / 16.0 <= w && w <= epsilon / 8.0;
    let epsilons: Vec<f64> = (1..=k)
        .map(|j| epsilon / (4.0 * j as f64 * (j as f64 + 1.0)))
        .collect();
    let eps_sum = epsilons.iter().sum();
    Ok(Schedule {
        k,
        epsilons,
        ratio,
        clamped,
        window_checked,
        window_ok,
        eps_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let s = schedule(256, 0.25, 0.5, 1).unwrap();
        assert_eq!(s.k, 7);
        assert!(s.window_ok);
        assert_eq!(s.epsilons[0], 0.0625);
        assert!(s.eps_sum < 0.125);
        assert_eq!(schedule(1024, 0.25, 0.5, 1).unwrap().k, 8);
    }

    #[test]
    fn small_ratio_is_clamped() {
        let s = schedule(1, 0.01, 100.0, 1).unwrap();
        assert_eq!(s.k, 1);
        assert!(s.clamped);
        assert!(!s.window_checked);
        assert!(s.warning().is_some());
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        assert!(schedule(0, 0.5, 1.0, 1).is_err());
        assert!(schedule(10, 0.0, 1.0, 1).is_err());
        assert!(schedule(10, 0.5, 0.0, 1).is_err());
        assert!(schedule(10, 0.5, 1.0, 0).is_err());
    }
}

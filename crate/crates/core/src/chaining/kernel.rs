//! The ramp kernel `phi` and its one-dimensional pieces.

/// `phi(x) = 1` for `x <= -1`, `-x` on `(-1, 0]`, `0` for `x > 0`.
#[inline]
pub fn phi(x: f64) -> f64 {
    if x <= -1.0 {
        1.0
    } else if x <= 0.0 {
        -x
    } else {
        0.0
    }
}

/// `phi((x - s) / (s - s_prev))`: equal to 1 up to `s_prev`, 0 beyond `s`.
///
/// An infinite right endpoint gives the limiting value 1; an infinite gap
/// with finite `s` uses `1/inf = 0` and gives `phi(0) = 0`.
#[inline]
pub fn ramp(x: f64, s: f64, s_prev: f64) -> f64 {
    if s == f64::INFINITY {
        return 1.0;
    }
    let gap = s - s_prev;
    if gap == f64::INFINITY {
        return 0.0;
    }
    phi((x - s) / gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_branches() {
        assert_eq!(phi(-2.0), 1.0);
        assert_eq!(phi(-1.0), 1.0);
        assert_eq!(phi(-0.5), 0.5);
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(0.7), 0.0);
    }

    #[test]
    fn ramp_conventions() {
        assert_eq!(ramp(5.0, f64::INFINITY, 1.0), 1.0);
        assert_eq!(ramp(-5.0, 0.0, f64::NEG_INFINITY), 0.0);
        assert_eq!(ramp(0.25, 0.5, 0.25), 1.0);
        assert_eq!(ramp(0.5, 0.5, 0.25), 0.0);
        assert_eq!(ramp(0.375, 0.5, 0.25), 0.5);
    }
}

//! The homeomorphism `[-inf, inf] -> [0, 1]`, `t -> 1/2 + atan(t)/pi`.
//!
//! Both tails go through `atan(1/t)` so that values near 0 keep full relative
//! precision. Near 1 the spacing of `f64` limits the round trip to roughly
//! `|t| * 1e-16` relative error.

use core::f64::consts::PI;
use num_traits::Float;

pub fn compactify(t: f64) -> f64 {
    if t == f64::INFINITY {
        1.0
    } else if t == f64::NEG_INFINITY {
        0.0
    } else if t < -1.0 {
        (-1.0 / t).atan() / PI
    } else if t > 1.0 {
        1.0 - (1.0 / t).atan() / PI
    } else {
        0.5 + t.atan() / PI
    }
}

pub fn decompactify(u: f64) -> f64 {
    if u <= 0.0 {
        f64::NEG_INFINITY
    } else if u >= 1.0 {
        f64::INFINITY
    } else if u < 0.25 {
        -1.0 / (PI * u).tan()
    } else if u > 0.75 {
        1.0 / (PI * (1.0 - u)).tan()
    } else {
        (PI * (u - 0.5)).tan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_values() {
        assert_eq!(compactify(0.0), 0.5);
        assert_eq!(compactify(f64::NEG_INFINITY), 0.0);
        assert_eq!(compactify(f64::INFINITY), 1.0);
        assert!((compactify(1.0) - 0.75).abs() < 1e-15);
        assert_eq!(decompactify(0.0), f64::NEG_INFINITY);
        assert_eq!(decompactify(1.0), f64::INFINITY);
    }
}

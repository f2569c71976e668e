//! Random iterative models `X_n = g(X_{n-1}, Y_n)` with maps Lipschitz in `x`.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear::operator_max_norm;
use super::path::SamplePath;
use crate::error::{Error, Result};
use crate::rng::{lane, stream};

/// `g(x, y) = A x + b y` or `g(x, y) = A tanh(x) + b y` (tanh coordinate-wise).
/// In both cases `K(y) = ||A||_inf` under the max norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum IterationMap {
    Affine { a: Vec<f64>, b: Vec<f64> },
    Saturating { a: Vec<f64>, b: Vec<f64> },
}

impl IterationMap {
    fn parts(&self) -> (&[f64], &[f64]) {
        match self {
            IterationMap::Affine { a, b } | IterationMap::Saturating { a, b } => (a, b),
        }
    }

    fn apply(&self, x: &[f64], y: f64, out: &mut [f64]) {
        let (a, b) = self.parts();
        let d = x.len();
        let saturate = matches!(self, IterationMap::Saturating { .. });
        for r in 0..d {
            let mut s = b[r] * y;
            for c in 0..d {
                let v = if saturate { x[c].tanh() } else { x[c] };
                s += a[r * d + c] * v;
            }
            out[r] = s;
        }
    }
}

/// Noise `Y` uniform on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformNoise {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzIterationModel {
    dim: usize,
    map: IterationMap,
    noise: UniformNoise,
    gamma0: f64,
    burn_in: usize,
    lipschitz: f64,
    contraction_moment: f64,
    growth_moment: f64,
}

pub const DEFAULT_BURN_IN: usize = 10_000;
const DIVERGENCE_LIMIT: f64 = 1e12;

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h);
    }
    s * h / 3.0
}

impl LipschitzIterationModel {
    pub fn new(
        d: usize,
        map: IterationMap,
        noise: UniformNoise,
        gamma0: f64,
        burn_in: usize,
    ) -> Result<Self> {
        let (a, b) = map.parts();
        if d == 0 || a.len() != d * d || b.len() != d {
            return Err(Error::InvalidModel(format!(
                "map parameters must be {d}x{d} and {d}"
            )));
        }
        if a.iter().chain(b).any(|v| !v.is_finite())
            || !(noise.lo.is_finite() && noise.hi.is_finite() && noise.lo < noise.hi)
        {
            return Err(Error::InvalidModel(
                "map and noise parameters must be finite with lo < hi".into(),
            ));
        }
        if !(gamma0 > 1.0) {
            return Err(Error::OutOfRange {
                what: "gamma0",
                value: gamma0,
            });
        }
        let k = operator_max_norm(a, d);
        // E[K max(K,1)^(2 gamma0)] with K constant.
        let contraction_moment = k * k.max(1.0).powf(2.0 * gamma0);
        if contraction_moment >= 1.0 {
            return Err(Error::InvalidModel(format!(
                "contraction condition fails: E[K max(K,1)^(2 gamma0)] = {contraction_moment} >= 1"
            )));
        }
        // E[(1 + K + |g(0,Y)|)^(gamma0+1) (1 + K)] with |g(0,y)| = |b|_inf |y|.
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let width = noise.hi - noise.lo;
        let growth_moment = (1.0 + k)
            * simpson(
                |y| (1.0 + k + bn * y.abs()).powf(gamma0 + 1.0),
                noise.lo,
                noise.hi,
                2000,
            )
            / width;
        Ok(Self {
            dim: d,
            map,
            noise,
            gamma0,
            burn_in,
            lipschitz: k,
            contraction_moment,
            growth_moment,
        })
    }

    /// `g(x, y) = 0.5 C x + b y` with `C` the cyclic shift, `b_i = 1 / (i + 1)`,
    /// `Y` uniform on `[-1, 1]`.
    pub fn default_model(d: usize) -> Result<Self> {
        let mut a = alloc::vec![0.0; d * d];
        for r in 0..d {
            a[r * d + (r + 1) % d] = 0.5;
        }
        let b = (0..d).map(|i| 1.0 / (i + 1) as f64).collect();
        Self::new(
            d,
            IterationMap::Affine { a, b },
            UniformNoise { lo: -1.0, hi: 1.0 },
            2.0,
            DEFAULT_BURN_IN,
        )
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }
    pub fn map(&self) -> &IterationMap {
        &self.map
    }
    pub fn noise(&self) -> UniformNoise {
        self.noise
    }
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }
    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
    }
    pub fn contraction_moment(&self) -> f64 {
        self.contraction_moment
    }
    pub fn growth_moment(&self) -> f64 {
        self.growth_moment
    }

    /// Dual exponent `gamma0 / (gamma0 - 1)` used for moment norms of this model.
    pub fn dual_exponent(&self) -> f64 {
        self.gamma0 / (self.gamma0 - 1.0)
    }

    pub fn simulate(&self, n: usize, seed: u64, replicate: u64) -> Result<SamplePath> {
        if n == 0 {
            return Err(Error::Empty("path length"));
        }
        let d = self.dim;
        let mut rng = stream(seed, replicate, lane::MAIN);
        let mut x = alloc::vec![0.0; d];
        let mut next = alloc::vec![0.0; d];
        let mut values = Vec::with_capacity(n * d);
        let mut k_sum = 0.0;
        for step in 0..self.burn_in + n {
            let y = self.noise.lo + (self.noise.hi - self.noise.lo) * rng.random::<f64>();
            self.map.apply(&x, y, &mut next);
            core::mem::swap(&mut x, &mut next);
            k_sum += self.lipschitz;
            let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(norm <= DIVERGENCE_LIMIT) {
                return Err(Error::Diverged { step, norm });
            }
            if step >= self.burn_in {
                values.extend_from_slice(&x);
            }
        }
        let steps = (self.burn_in + n) as f64;
        Ok(SamplePath::new(values, d, "lipschitz", seed, replicate)?
            .with_metadata("mean_contraction", k_sum / steps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(a: f64, b: f64, lo: f64, hi: f64) -> Result<LipschitzIterationModel> {
        LipschitzIterationModel::new(
            1,
            IterationMap::Affine {
                a: alloc::vec![a],
                b: alloc::vec![b],
            },
            UniformNoise { lo, hi },
            2.0,
            100,
        )
    }

    #[test]
    fn identity_map_is_rejected() {
        assert!(affine(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn noise_only_map_is_iid() {
        let m = affine(0.0, 1.0, 0.0, 1.0).unwrap();
        let p = m.simulate(1000, 4, 0).unwrap();
        assert!(p.values().iter().all(|v| (0.0..1.0).contains(v)));
        assert_eq!(p.metadata["mean_contraction"], 0.0);
    }

    #[test]
    fn default_model_satisfies_conditions() {
        let m = LipschitzIterationModel::default_model(3).unwrap();
        assert_eq!(m.lipschitz_constant(), 0.5);
        assert!(m.contraction_moment() < 1.0);
        assert!(m.growth_moment().is_finite());
    }

    #[test]
    fn growth_moment_quadrature() {
        // K = 0.5, b = 1, Y ~ U[0,1], gamma0 = 2: 1.5 * E[(1.5 + Y)^3] = 1.5 * (2.5^4 - 1.5^4) / 4.
        let m = affine(0.5, 1.0, 0.0, 1.0).unwrap();
        let exact = 1.5 * (2.5f64.powi(4) - 1.5f64.powi(4)) / 4.0;
        assert!((m.growth_moment() - exact).abs() < 1e-9);
    }
}

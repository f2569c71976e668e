use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::covariance::{BlockSpec, Estimate};
use super::observable::Observable;
use crate::error::{Error, Result};
use crate::generators::FiniteMarkovModel;
use crate::stats::{ols, std_err};

/// Source of joint moments `E[f(X_{o_0}) f(X_{o_1}) .. f(X_{o_p})]` of a stationary sequence.
pub trait ProductMoments {
    /// Offsets are nondecreasing and start at 0.
    fn product_moment(&self, offsets: &[usize]) -> Result<Estimate>;
}

/// Monte Carlo moments from evaluated replicate paths.
///
/// Each replicate averages the product over its first `window` admissible
/// start positions; the standard error uses the replicate averages.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleMoments<'a> {
    values: &'a [Vec<f64>],
    window: usize,
}

impl<'a> EnsembleMoments<'a> {
    pub fn new(values: &'a [Vec<f64>], window: usize) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(
                "ensemble moments need at least two replicates".into(),
            ));
        }
        if window == 0 {
            return Err(Error::OutOfRange {
                what: "window",
                value: 0.0,
            });
        }
        Ok(Self { values, window })
    }
}

impl ProductMoments for EnsembleMoments<'_> {
    fn product_moment(&self, offsets: &[usize]) -> Result<Estimate> {
        let span = offsets.last().copied().unwrap_or(0);
        let n = self.values.iter().map(Vec::len).min().unwrap_or(0);
        if span >= n {
            return Err(Error::IndexOutOfRange(format!(
                "offset {span} beyond path length {n}"
            )));
        }
        let w = self.window.min(n - span);
        let reps: Vec<f64> = self
            .values
            .iter()
            .map(|v| {
                (0..w)
                    .map(|s| offsets.iter().map(|o| v[s + o]).product::<f64>())
                    .sum::<f64>()
                    / w as f64
            })
            .collect();
        Ok(Estimate {
            estimate: crate::stats::mean(&reps),
            stderr: std_err(&reps),
        })
    }
}

/// Exact moments of a stationary finite chain:
/// `E = pi D P^{g_1} D .. P^{g_p} D 1` with `D = diag(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMoments {
    states: usize,
    transition: Vec<f64>,
    stationary: Vec<f64>,
    f: Vec<f64>,
}

impl MarkovMoments {
    pub fn new(model: &FiniteMarkovModel, f: &Observable) -> Result<Self> {
        f.check_dimension(model.dimension())?;
        let values = (0..model.states())
            .map(|s| f.eval(model.embedding(s)))
            .collect();
        Self::from_state_values(model, values)
    }

    pub fn from_state_values(model: &FiniteMarkovModel, f: Vec<f64>) -> Result<Self> {
        if f.len() != model.states() {
            return Err(Error::DimensionMismatch {
                expected: model.states(),
                found: f.len(),
            });
        }
        Ok(Self {
            states: model.states(),
            transition: model.transition().to_vec(),
            stationary: model.stationary().to_vec(),
            f,
        })
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let s = self.states;
        (0..s)
            .map(|i| (0..s).map(|j| self.transition[i * s + j] * v[j]).sum())
            .collect()
    }

    fn moment(&self, offsets: &[usize]) -> f64 {
        let mut v: Vec<f64> = self.f.clone();
        for w in offsets.windows(2).rev() {
            for _ in 0..w[1] - w[0] {
                v = self.apply(&v);
            }
            v.iter_mut().zip(&self.f).for_each(|(a, b)| *a *= b);
        }
        v.iter().zip(&self.stationary).map(|(a, p)| a * p).sum()
    }

    /// Exact block covariance for the pattern `spec`.
    pub fn block_covariance(&self, spec: &BlockSpec) -> f64 {
        let o = spec.offsets();
        let q = spec.q();
        let right: Vec<usize> = o[q..].iter().map(|x| x - o[q]).collect();
        self.moment(&o) - self.moment(&o[..q]) * self.moment(&right)
    }
}

impl ProductMoments for MarkovMoments {
    fn product_moment(&self, offsets: &[usize]) -> Result<Estimate> {
        Ok(Estimate {
            estimate: self.moment(offsets),
            stderr: 0.0,
        })
    }
}

/// Stationary Gaussian sequence with `Cov(Y_i, Y_j) = variance * theta^|i - j|`,
/// product moments by Wick's formula. A synthetic model with known
/// geometric covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub theta: f64,
    pub variance: f64,
}

impl GaussianMoments {
    fn wick(&self, times: &[usize]) -> f64 {
        if times.is_empty() {
            return 1.0;
        }
        if times.len() % 2 == 1 {
            return 0.0;
        }
        let first = times[0];
        let rest = &times[1..];
        let mut total = 0.0;
        for k in 0..rest.len() {
            let lag = rest[k].abs_diff(first);
            let cov = self.variance * self.theta.powi(lag as i32);
            let others: Vec<usize> = rest
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, t)| *t)
                .collect();
            total += cov * self.wick(&others);
        }
        total
    }
}

impl ProductMoments for GaussianMoments {
    fn product_moment(&self, offsets: &[usize]) -> Result<Estimate> {
        if offsets.len() > 12 {
            return Err(Error::Budget {
                required: offsets.len() as u128,
                cap: 12,
            });
        }
        Ok(Estimate {
            estimate: self.wick(offsets),
            stderr: 0.0,
        })
    }
}

/// Caps on the enumerated moment sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentBudget {
    pub max_p: usize,
    pub max_n: usize,
}

impl Default for MomentBudget {
    fn default() -> Self {
        Self {
            max_p: 3,
            max_n: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSum {
    pub value: f64,
    /// Sum of the per-term standard errors.
    pub stderr: f64,
    pub terms: u64,
}

fn binomial(n: u128, k: u128) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of index tuples in `I_n(p)`: `C(n - 1 + p, p)`.
pub fn in_term_count(n: usize, p: usize) -> u128 {
    if p == 0 || n == 0 {
        return 0;
    }
    binomial((n - 1 + p) as u128, p as u128)
}

/// Number of index tuples in `J_n(p, q)`.
pub fn jn_term_count(n: usize, p: usize, q: usize) -> u128 {
    if p == 0 || q == 0 || q > p || n == 0 {
        return 0;
    }
    // Tuples of length p - 1 with entries in [0, top] and sum <= budget.
    fn bounded(len: usize, top: usize, budget: usize) -> u128 {
        let mut ways = vec![0u128; budget + 1];
        ways[0] = 1;
        for _ in 0..len {
            let mut next = vec![0u128; budget + 1];
            for (s, w) in ways.iter().enumerate() {
                if *w == 0 {
                    continue;
                }
                for v in 0..=top.min(budget - s) {
                    next[s + v] += w;
                }
            }
            ways = next;
        }
        ways.iter().sum()
    }
    (0..n).map(|top| bounded(p - 1, top, n - 1 - top)).sum()
}

fn check_budget(n: usize, p: usize, required: u128, budget: MomentBudget) -> Result<()> {
    if p > budget.max_p || n > budget.max_n {
        let cap = in_term_count(budget.max_n, budget.max_p);
        return Err(Error::Budget { required, cap });
    }
    Ok(())
}

fn enumerate(
    m: &dyn ProductMoments,
    offsets: &mut Vec<usize>,
    remaining: usize,
    depth: usize,
    bounds: &dyn Fn(usize) -> (usize, usize),
    acc: &mut MomentSum,
) -> Result<()> {
    if depth == 0 {
        let e = m.product_moment(offsets)?;
        acc.value += e.estimate.abs();
        acc.stderr += e.stderr;
        acc.terms += 1;
        return Ok(());
    }
    let pos = offsets.len();
    let (lo, hi) = bounds(pos);
    let last = *offsets.last().expect("offsets start with 0");
    for i in lo..=hi.min(remaining) {
        offsets.push(last + i);
        enumerate(m, offsets, remaining - i, depth - 1, bounds, acc)?;
        offsets.pop();
    }
    Ok(())
}

/// `I_n(p) = sum |E[f(X_0) f(X_{i_1*}) .. f(X_{i_p*})]|` over `0 <= i_a <= n - 1`
/// with `i_p* <= n - 1`; `I_n(0) = 0`.
pub fn moment_sum_in(
    m: &dyn ProductMoments,
    n: usize,
    p: usize,
    budget: MomentBudget,
) -> Result<MomentSum> {
    check_budget(n, p, in_term_count(n, p), budget)?;
    let mut acc = MomentSum {
        value: 0.0,
        stderr: 0.0,
        terms: 0,
    };
    if p == 0 || n == 0 {
        return Ok(acc);
    }
    let mut offsets = vec![0usize];
    enumerate(m, &mut offsets, n - 1, p, &|_| (0, n - 1), &mut acc)?;
    Ok(acc)
}

/// `J_n(p, q)`: the terms of `I_n(p)` whose gap `i_q` is at least every other gap.
pub fn moment_sum_jn(
    m: &dyn ProductMoments,
    n: usize,
    p: usize,
    q: usize,
    budget: MomentBudget,
) -> Result<MomentSum> {
    if q == 0 || q > p {
        return Err(Error::OutOfRange {
            what: "q",
            value: q as f64,
        });
    }
    check_budget(n, p, jn_term_count(n, p, q), budget)?;
    let mut acc = MomentSum {
        value: 0.0,
        stderr: 0.0,
        terms: 0,
    };
    if n == 0 {
        return Ok(acc);
    }
    for top in 0..n {
        // Position `q` in the offsets vector holds i_q*.
        let bounds = move |pos: usize| if pos == q { (top, top) } else { (0, top) };
        let mut offsets = vec![0usize];
        enumerate(m, &mut offsets, n - 1, p, &bounds, &mut acc)?;
    }
    Ok(acc)
}

/// `I_n(p)` against `sum_q J_n(p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRelation {
    pub n: usize,
    pub p: usize,
    pub i_n: MomentSum,
    pub j_n: Vec<MomentSum>,
    /// `I_n(p) <= sum_q J_n(p, q) + combined stderr`.
    pub holds: bool,
}

pub fn moment_relation(
    m: &dyn ProductMoments,
    n: usize,
    p: usize,
    budget: MomentBudget,
) -> Result<MomentRelation> {
    let i_n = moment_sum_in(m, n, p, budget)?;
    let j_n = (1..=p)
        .map(|q| moment_sum_jn(m, n, p, q, budget))
        .collect::<Result<Vec<_>>>()?;
    let j_sum: f64 = j_n.iter().map(|j| j.value).sum();
    let se = i_n.stderr + j_n.iter().map(|j| j.stderr).sum::<f64>();
    Ok(MomentRelation {
        n,
        p,
        holds: i_n.value <= j_sum + se + 1e-12 * j_sum.abs(),
        i_n,
        j_n,
    })
}

/// Constants in the partial-sum bound shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundShape {
    /// `||f||` of the function space.
    pub norm: f64,
    /// `||f(X_0)||_r`.
    pub r_norm: f64,
    pub theta: f64,
}

impl BoundShape {
    /// `sum_{i=1}^p n^i ||f(X_0)||_r^i log^{2p-i}(||f|| + 1/theta)`.
    pub fn value(&self, n: usize, p: u32) -> f64 {
        let lg = (self.norm + 1.0 / self.theta).ln();
        (1..=p as i32)
            .map(|i| (n as f64).powi(i) * self.r_norm.powi(i) * lg.powi(2 * p as i32 - i))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub p: u32,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// `E[S_n^2]`.
    pub second: Vec<Estimate>,
    /// `E[S_n^{2p}]`.
    pub even: Vec<Estimate>,
    /// `E[S_n^{2p+1}]`, signed.
    pub odd: Vec<Estimate>,
    /// `|E[S_n^3]| / E[S_n^2]^{3/2}` per `n`.
    pub skewness: Vec<f64>,
    pub bound_shape: Option<Vec<f64>>,
    /// Smallest constant making the bound hold at the smallest `n`.
    pub k_fit: Option<f64>,
    /// Slope of `log E[S_n^{2p}]` against `log n`.
    pub slope: f64,
    pub slope_se: f64,
    /// Slope of `log E[S_n^2]` against `log n`.
    pub second_slope: f64,
    /// `slope <= p + GROWTH_TOLERANCE`.
    pub growth_ok: bool,
}

pub const GROWTH_TOLERANCE: f64 = 0.1;
pub const MIN_MOMENT_REPLICATES: usize = 500;

fn moment_estimate(xs: &[f64], power: i32) -> Estimate {
    let v: Vec<f64> = xs.iter().map(|s| s.powi(power)).collect();
    Estimate {
        estimate: crate::stats::mean(&v),
        stderr: std_err(&v),
    }
}

/// Moments of `S_n = f(X_0) + .. + f(X_{n-1})` across replicates for each `n`.
pub fn partial_sum_moments(
    values: &[Vec<f64>],
    n_grid: &[usize],
    p: u32,
    shape: Option<BoundShape>,
) -> Result<MomentReport> {
    if values.len() < MIN_MOMENT_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "partial-sum moments need at least {MIN_MOMENT_REPLICATES} replicates, got {}",
            values.len()
        )));
    }
    if p == 0 {
        return Err(Error::OutOfRange {
            what: "p",
            value: 0.0,
        });
    }
    if n_grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "n grid needs at least two sizes".into(),
        ));
    }
    let len = values.iter().map(Vec::len).min().unwrap_or(0);
    let mut second = Vec::new();
    let mut even = Vec::new();
    let mut odd = Vec::new();
    let mut skewness = Vec::new();
    for &n in n_grid {
        if n == 0 || n > len {
            return Err(Error::IndexOutOfRange(format!(
                "n = {n} with paths of length {len}"
            )));
        }
        let sums: Vec<f64> = values.iter().map(|v| v[..n].iter().sum()).collect();
        let s2 = moment_estimate(&sums, 2);
        let s3 = moment_estimate(&sums, 3);
        skewness.push(if s2.estimate > 0.0 {
            s3.estimate.abs() / s2.estimate.powf(1.5)
        } else {
            0.0
        });
        second.push(s2);
        even.push(moment_estimate(&sums, 2 * p as i32));
        odd.push(moment_estimate(&sums, 2 * p as i32 + 1));
    }
    let logn: Vec<f64> = n_grid.iter().map(|n| (*n as f64).ln()).collect();
    let fit_slope = |m: &[Estimate]| -> Result<(f64, f64)> {
        if m.iter().all(|e| e.estimate == 0.0) {
            return Ok((0.0, 0.0));
        }
        if m.iter().any(|e| e.estimate <= 0.0) {
            return Err(Error::Numerical("nonpositive even moment".into()));
        }
        let y: Vec<f64> = m.iter().map(|e| e.estimate.ln()).collect();
        let f = ols(&logn, &y)?;
        Ok((f.slope, f.slope_se))
    };
    let (slope, slope_se) = fit_slope(&even)?;
    let (second_slope, _) = fit_slope(&second)?;
    let bound_shape = shape.map(|s| n_grid.iter().map(|n| s.value(*n, p)).collect::<Vec<_>>());
    let k_fit = bound_shape.as_ref().map(|b| {
        if b[0] > 0.0 {
            even[0].estimate / b[0]
        } else {
            f64::INFINITY
        }
    });
    Ok(MomentReport {
        p,
        n_grid: n_grid.to_vec(),
        replicates: values.len(),
        second,
        even,
        odd,
        skewness,
        bound_shape,
        k_fit,
        slope,
        slope_se,
        second_slope,
        growth_ok: slope <= p as f64 + GROWTH_TOLERANCE,
    })
}

/// The integer `n_0` with `x < n_0 <= x + 1`, `x = log(||f|| + 1/theta) / (-log theta)`.
pub fn cutoff_n0(norm: f64, theta: f64) -> Result<u64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRange {
            what: "theta",
            value: theta,
        });
    }
    if !(norm >= 0.0 && norm.is_finite()) {
        return Err(Error::OutOfRange {
            what: "norm",
            value: norm,
        });
    }
    let x = (norm + 1.0 / theta).ln() / -theta.ln();
    if !(x < 1e18) {
        return Err(Error::OutOfRange {
            what: "cutoff",
            value: x,
        });
    }
    Ok(x.floor() as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_counts_match_enumeration() {
        let g = GaussianMoments {
            theta: 0.5,
            variance: 1.0,
        };
        for n in 1..8 {
            for p in 1..=3 {
                let i = moment_sum_in(&g, n, p, MomentBudget::default()).unwrap();
                assert_eq!(u128::from(i.terms), in_term_count(n, p));
                for q in 1..=p {
                    let j = moment_sum_jn(&g, n, p, q, MomentBudget::default()).unwrap();
                    assert_eq!(u128::from(j.terms), jn_term_count(n, p, q));
                }
            }
        }
    }

    #[test]
    fn budget_rejects_large_requests() {
        let g = GaussianMoments {
            theta: 0.5,
            variance: 1.0,
        };
        match moment_sum_in(&g, 65, 2, MomentBudget::default()) {
            Err(Error::Budget { required, .. }) => assert_eq!(required, in_term_count(65, 2)),
            other => panic!("{other:?}"),
        }
        assert!(moment_sum_in(&g, 10, 4, MomentBudget::default()).is_err());
    }

    #[test]
    fn p_zero_and_p_equals_q() {
        let g = GaussianMoments {
            theta: 0.3,
            variance: 1.0,
        };
        assert_eq!(
            moment_sum_in(&g, 10, 0, MomentBudget::default())
                .unwrap()
                .value,
            0.0
        );
        let i1 = moment_sum_in(&g, 10, 1, MomentBudget::default()).unwrap();
        let j11 = moment_sum_jn(&g, 10, 1, 1, MomentBudget::default()).unwrap();
        assert_eq!(i1, j11);
    }

    #[test]
    fn wick_pairings() {
        let g = GaussianMoments {
            theta: 0.5,
            variance: 2.0,
        };
        assert_eq!(g.wick(&[0, 0]), 2.0);
        assert_eq!(g.wick(&[0, 0, 0, 0]), 12.0);
        assert_eq!(g.wick(&[0, 1, 2]), 0.0);
        // pairs (0,1)(2,3), (0,2)(1,3), (0,3)(1,2) with covariance 2 * 0.5^lag
        let e = 1.0 * 1.0 + 0.5 * 0.5 + 0.25 * 1.0;
        assert!((g.wick(&[0, 1, 2, 3]) - e).abs() < 1e-15);
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_n0(1.0, 0.5).unwrap(), 2);
        assert!(cutoff_n0(100.0, 0.5).unwrap() > cutoff_n0(1.0, 0.5).unwrap());
        assert!(cutoff_n0(1.0, 1.0).is_err());
    }

    #[test]
    fn markov_moments_two_state() {
        let model = FiniteMarkovModel::two_state(0.75).unwrap();
        let m = MarkovMoments::from_state_values(&model, vec![1.0, -1.0]).unwrap();
        for k in 0..10 {
            let c = m.block_covariance(&BlockSpec::pair(k));
            assert!((c - 0.5f64.powi(k as i32)).abs() < 1e-14);
        }
    }
}

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::Serialize;

use super::kernel::ramp;
use super::system::ChainingSystem;
use crate::empirical::phi_j;
use crate::error::{Error, Result};
use crate::foundation::{DistributionModel, Point};
use crate::generators::SamplePath;
use crate::rng::{lane, stream};

/// Outcome of the kernel sandwich verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub t_points: usize,
    /// Evaluation points `t` outside the covered region, not checked.
    pub skipped: usize,
    pub x_points: usize,
    /// Inequalities evaluated.
    pub checks: u64,
    /// Failed inequalities `psi^(k-1) <= psi^(k)`, `psi^(K) <= 1{x <= t} <= psi^(k)_{l+2}`.
    pub violations: u64,
    /// Points where `psi^(0)_{l(0,t)}` differs from `phi_j`.
    pub phi_mismatches: u64,
    /// Levels with `l(k-1, t) != floor(l(k, t) / 2)`.
    pub chain_violations: u64,
    /// Levels breaking `s^(k-1) <= s^(k) <= t < s^(K)_{l+1}`.
    pub order_violations: u64,
    /// Smallest margin over all evaluated inequalities.
    pub worst_slack: f64,
}

impl SandwichReport {
    pub fn total_violations(&self) -> u64 {
        self.violations + self.phi_mismatches + self.chain_violations + self.order_violations
    }
}

#[derive(Clone, Copy)]
enum Factor {
    Zero,
    One,
    Ramp(f64, f64),
}

impl Factor {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            Factor::Zero => 0.0,
            Factor::One => 1.0,
            Factor::Ramp(s, s_prev) => ramp(x, s, s_prev),
        }
    }
}

fn factor(sys: &ChainingSystem, axis: usize, j: usize, k: u32, l: u64) -> Result<Factor> {
    let per = 1u64 << k;
    if j == 1 && l == 0 {
        Ok(Factor::Zero)
    } else if j == sys.partition().m() && l >= per {
        Ok(Factor::One)
    } else {
        Ok(Factor::Ramp(
            sys.s_point(axis, j, k, l as i64)?,
            sys.s_point(axis, j, k, l as i64 - 1)?,
        ))
    }
}

/// Checks the chain sandwich at every `(t, x)` pair, `x` ranging over the path.
pub fn verify_sandwich(
    sys: &ChainingSystem,
    path: &SamplePath,
    t_points: &[Point],
) -> Result<SandwichReport> {
    let d = sys.dimension();
    if path.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: path.dim(),
        });
    }
    let depth = sys.depth();
    let levels = depth as usize + 1;
    let mut rep = SandwichReport {
        t_points: t_points.len(),
        skipped: 0,
        x_points: path.len(),
        checks: 0,
        violations: 0,
        phi_mismatches: 0,
        chain_violations: 0,
        order_violations: 0,
        worst_slack: f64::INFINITY,
    };
    let mut lower = vec![Factor::Zero; levels * d];
    let mut upper = vec![Factor::Zero; levels * d];
    let mut v = vec![0.0; levels];
    for t in t_points {
        let chain = match sys.chain_index(t) {
            Ok(c) => c,
            Err(Error::OutsideRegion { .. }) => {
                rep.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for i in 0..d {
            let j = chain.cell[i];
            let mut prev_s = f64::NEG_INFINITY;
            for k in 0..levels {
                let l = chain.levels[k][i];
                if k > 0 && chain.levels[k - 1][i] != l / 2 {
                    rep.chain_violations += 1;
                }
                let s = sys.s_point(i, j, k as u32, l as i64)?;
                if s < prev_s || s > t.coords()[i] {
                    rep.order_violations += 1;
                }
                prev_s = s;
                lower[k * d + i] = factor(sys, i, j, k as u32, l)?;
                upper[k * d + i] = factor(sys, i, j, k as u32, l + 2)?;
            }
            let l_top = chain.levels[depth as usize][i];
            if sys.s_point(i, j, depth, l_top as i64 + 1)? <= t.coords()[i] {
                rep.order_violations += 1;
            }
        }
        let tc = t.coords();
        for x in path.rows() {
            let ind = if x.iter().zip(tc).all(|(a, b)| a <= b) {
                1.0
            } else {
                0.0
            };
            let mut slack = f64::INFINITY;
            for k in 0..levels {
                let mut lo = 1.0;
                let mut hi = 1.0;
                for i in 0..d {
                    lo *= lower[k * d + i].eval(x[i]);
                    hi *= upper[k * d + i].eval(x[i]);
                }
                v[k] = lo;
                if k > 0 {
                    let gap = lo - v[k - 1];
                    if gap < 0.0 {
                        rep.violations += 1;
                    }
                    slack = slack.min(gap);
                }
                let gap = hi - ind;
                if gap < 0.0 {
                    rep.violations += 1;
                }
                slack = slack.min(gap);
            }
            let gap = ind - v[depth as usize];
            if gap < 0.0 {
                rep.violations += 1;
            }
            slack = slack.min(gap);
            if v[0] != phi_j(sys.partition(), &chain.cell, x) {
                rep.phi_mismatches += 1;
            }
            rep.checks += 2 * levels as u64;
            rep.worst_slack = rep.worst_slack.min(slack);
        }
    }
    Ok(rep)
}

/// Monte Carlo estimate of an `L^r` norm against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementReport {
    pub k: u32,
    pub cell: Vec<usize>,
    pub l: Vec<u64>,
    pub r: f64,
    pub estimate: f64,
    pub mc_stderr: f64,
    pub bound: f64,
    pub draws: usize,
    /// `estimate <= bound + 3 mc_stderr`.
    pub pass: bool,
}

fn lr_norm(
    model: &DistributionModel,
    r: f64,
    draws: usize,
    seed: u64,
    mut z: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<(f64, f64)> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::OutOfRange {
            what: "r",
            value: r,
        });
    }
    if draws < 2 {
        return Err(Error::OutOfRange {
            what: "draws",
            value: draws as f64,
        });
    }
    let mut rng = stream(seed, 0, lane::MONTE_CARLO);
    let mut x = vec![0.0; model.dimension()];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..draws {
        model.sample_into(&mut rng, &mut x);
        let a = z(&x)?.abs().powf(r);
        sum += a;
        sum2 += a * a;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    let se_mean = (var / n).sqrt();
    let est = mean.powf(1.0 / r);
    // Delta method; at a zero mean the norm's error is bounded by se^(1/r).
    let se = if mean > 0.0 {
        se_mean * est / (r * mean)
    } else {
        se_mean.powf(1.0 / r)
    };
    Ok((est, se))
}

fn check_multi(sys: &ChainingSystem, k: u32, cell: &[usize], l: &[u64]) -> Result<()> {
    let d = sys.dimension();
    if cell.len() != d || l.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: cell.len().min(l.len()),
        });
    }
    if k > sys.depth() {
        return Err(Error::IndexOutOfRange(format!(
            "level {k} beyond depth {}",
            sys.depth()
        )));
    }
    Ok(())
}

/// `|| psi^(k)_l(X) - psi^(k-1)_{floor(l/2)}(X) ||_r <= (3 d h / 2^k)^(1/r)`, `X ~ model`.
pub fn increment_norm_check(
    sys: &ChainingSystem,
    model: &DistributionModel,
    k: u32,
    cell: &[usize],
    l: &[u64],
    r: f64,
    draws: usize,
    seed: u64,
) -> Result<IncrementReport> {
    check_multi(sys, k, cell, l)?;
    if k == 0 {
        return Err(Error::IndexOutOfRange("increment needs k >= 1".into()));
    }
    let parent: Vec<u64> = l.iter().map(|v| v / 2).collect();
    let (estimate, mc_stderr) = lr_norm(model, r, draws, seed, |x| {
        Ok(sys.psi(k, cell, l, x)? - sys.psi(k - 1, cell, &parent, x)?)
    })?;
    let bound =
        (3.0 * sys.dimension() as f64 * sys.partition().h() / 2f64.powi(k as i32)).powf(1.0 / r);
    Ok(IncrementReport {
        k,
        cell: cell.to_vec(),
        l: l.to_vec(),
        r,
        estimate,
        mc_stderr,
        bound,
        draws,
        pass: estimate <= bound + 3.0 * mc_stderr,
    })
}

/// `|| psi^(K)_{l+2}(X) - psi^(K)_l(X) ||_r <= (3 d h / 2^K)^(1/r)`, `X ~ model`.
pub fn top_increment_check(
    sys: &ChainingSystem,
    model: &DistributionModel,
    cell: &[usize],
    l: &[u64],
    r: f64,
    draws: usize,
    seed: u64,
) -> Result<IncrementReport> {
    let k = sys.depth();
    check_multi(sys, k, cell, l)?;
    let upper: Vec<u64> = l.iter().map(|v| v + 2).collect();
    let (estimate, mc_stderr) = lr_norm(model, r, draws, seed, |x| {
        Ok(sys.psi(k, cell, &upper, x)? - sys.psi(k, cell, l, x)?)
    })?;
    let bound =
        (3.0 * sys.dimension() as f64 * sys.partition().h() / 2f64.powi(k as i32)).powf(1.0 / r);
    Ok(IncrementReport {
        k,
        cell: cell.to_vec(),
        l: l.to_vec(),
        r,
        estimate,
        mc_stderr,
        bound,
        draws,
        pass: estimate <= bound + 3.0 * mc_stderr,
    })
}

/// Hölder norms of the level-`k` kernels against the modulus envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub k: u32,
    pub alpha: f64,
    /// Smallest finite ramp width over all kernels at level `k`.
    pub min_gap: f64,
    /// `1 + d * min_gap^(-alpha)`, a bound on every `||psi^(k)_l||_alpha`.
    pub norm_bound: f64,
    /// `exp(alpha (D 2^k / h)^(1/gamma))`.
    pub envelope: f64,
    /// `norm_bound / envelope`.
    pub b_hat: f64,
    /// `norm_bound <= 1 + d * envelope`.
    pub within_envelope: bool,
}

/// Bounds the Hölder norms of all level-`k` kernels from the breakpoint gaps.
///
/// Each factor `phi((x - s) / g)` has `alpha`-seminorm at most `g^(-alpha)`,
/// so a product of `d` factors in `[0, 1]` has norm at most
/// `1 + sum_i g_i^(-alpha)`. Constant factors contribute nothing.
pub fn holder_growth_check(sys: &ChainingSystem, k: u32) -> Result<GrowthReport> {
    let fit = sys.modulus().ok_or_else(|| {
        Error::InvalidArgument("model has no fitted modulus of continuity".into())
    })?;
    if k > sys.depth() {
        return Err(Error::IndexOutOfRange(format!(
            "level {k} beyond depth {}",
            sys.depth()
        )));
    }
    let m = sys.partition().m();
    let per = 1u64 << k;
    let mut min_gap = f64::INFINITY;
    for axis in 0..sys.dimension() {
        for j in 1..=m {
            for l in 0..=per + 1 {
                if let Factor::Ramp(s, s_prev) = factor(sys, axis, j, k, l)? {
                    let gap = s - s_prev;
                    if s.is_finite() && gap.is_finite() {
                        if gap <= 0.0 {
                            return Err(Error::Numerical(format!(
                                "nonpositive gap at axis {axis}, j={j}, l={l}"
                            )));
                        }
                        min_gap = min_gap.min(gap);
                    }
                }
            }
        }
    }
    let alpha = sys.alpha();
    let d = sys.dimension() as f64;
    let norm_bound = if min_gap.is_finite() {
        1.0 + d * min_gap.powf(-alpha)
    } else {
        1.0
    };
    let h = sys.partition().h();
    let envelope = (alpha * (fit.d_hat * 2f64.powi(k as i32) / h).powf(1.0 / fit.gamma_hat)).exp();
    Ok(GrowthReport {
        k,
        alpha,
        min_gap,
        norm_bound,
        envelope,
        b_hat: norm_bound / envelope,
        within_envelope: norm_bound <= 1.0 + d * envelope,
    })
}

/// Smallest integer `p > d r gamma / (gamma - r)`; needs `gamma > r >= 1`.
pub fn min_moment_order(d: usize, r: f64, gamma: f64) -> Result<u32> {
    if d == 0 {
        return Err(Error::OutOfRange {
            what: "d",
            value: 0.0,
        });
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::OutOfRange {
            what: "r",
            value: r,
        });
    }
    if !(gamma > r) {
        return Err(Error::OutOfRange {
            what: "gamma (must exceed r)",
            value: gamma,
        });
    }
    let x = d as f64 * r * gamma / (gamma - r);
    if !(x.is_finite() && x < u32::MAX as f64) {
        return Err(Error::OutOfRange {
            what: "moment order",
            value: x,
        });
    }
    Ok(x.floor() as u32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::build_partition;
    use crate::generators::IidUniform;

    fn system(d: usize, m: usize, depth: u32) -> (DistributionModel, ChainingSystem) {
        let model = DistributionModel::uniform_cube(d).unwrap();
        let p = build_partition(&model, m).unwrap();
        let sys = ChainingSystem::new(&model, p, depth, 1.0, 0.5).unwrap();
        (model, sys)
    }

    #[test]
    fn sandwich_holds_on_iid_path() {
        let (_, sys) = system(2, 4, 5);
        let path = IidUniform::new(2).unwrap().simulate(200, 3, 0).unwrap();
        let ts: Vec<Point> = path
            .rows()
            .map(|r| Point::new(r.to_vec()).unwrap())
            .collect();
        let rep = verify_sandwich(&sys, &path, &ts).unwrap();
        assert_eq!(rep.total_violations(), 0);
        assert!(rep.worst_slack >= 0.0);
        assert_eq!(rep.t_points, 200);
    }

    #[test]
    fn increment_bound() {
        let (model, sys) = system(2, 4, 4);
        for k in 1..=4 {
            let rep =
                increment_norm_check(&sys, &model, k, &[2, 3], &[3, 1], 1.0, 4000, 1).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        let top = top_increment_check(&sys, &model, &[1, 4], &[0, 15], 2.0, 4000, 2).unwrap();
        assert!(top.pass, "{top:?}");
    }

    #[test]
    fn growth_bound_uses_smallest_gap() {
        let model = DistributionModel::uniform_cube(1).unwrap();
        let (model, _) = model
            .fit_modulus(&[1e-3, 1e-2, 0.1])
            .unwrap_or_else(|_| unreachable!());
        let p = build_partition(&model, 4).unwrap();
        let sys = ChainingSystem::new(&model, p, 2, 1.0, 0.5).unwrap();
        let rep = holder_growth_check(&sys, 0).unwrap();
        assert_eq!(rep.min_gap, 0.25);
        assert_eq!(rep.norm_bound, 5.0);
        let rep2 = holder_growth_check(&sys, 2).unwrap();
        assert_eq!(rep2.norm_bound, 17.0);
    }

    #[test]
    fn moment_order() {
        assert_eq!(min_moment_order(1, 1.0, 2.0).unwrap(), 3);
        assert_eq!(min_moment_order(2, 1.0, 3.0).unwrap(), 4);
        assert!(min_moment_order(1, 2.0, 2.0).is_err());
    }
}

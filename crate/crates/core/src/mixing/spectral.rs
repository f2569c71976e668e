use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::Serialize;

use super::covariance::{block_covariance, BlockSpec, Estimate};
use super::moments::MarkovMoments;
use super::observable::Observable;
use crate::error::{Error, Result};
use crate::generators::FiniteMarkovModel;
use crate::stats::ols;

/// `|lambda_2|` at or above this counts as no spectral gap.
pub const NO_GAP_TOL: f64 = 1e-9;
/// Allowed distance between the fitted rate and `|lambda_2|`.
pub const RATE_AGREEMENT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionDecay {
    pub values: Vec<f64>,
    /// `||P^n f - Pi f||_inf` for `n = 0..=max_power`.
    pub norms: Vec<f64>,
    pub kappa: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralGapReport {
    pub lambda2: f64,
    pub no_gap: bool,
    pub functions: Vec<FunctionDecay>,
    /// Largest fitted rate over the test functions.
    pub theta: Option<f64>,
    /// `||P^n - Pi||` as an operator on bounded functions.
    pub operator_norms: Vec<f64>,
    /// `max_n ||P^n - Pi|| / theta^n`.
    pub kappa: Option<f64>,
    /// `|theta - |lambda_2|| <= RATE_AGREEMENT`.
    pub agrees: bool,
}

fn mat_mul(a: &[f64], b: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; s * s];
    for i in 0..s {
        for k in 0..s {
            let aik = a[i * s + k];
            if aik != 0.0 {
                for j in 0..s {
                    out[i * s + j] += aik * b[k * s + j];
                }
            }
        }
    }
    out
}

/// Fits `norm_n ~ kappa theta^n` on the terms above round-off.
fn fit_decay(norms: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
    let floor = norms[0] * 1e-12;
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > floor && **v > f64::MIN_POSITIVE)
        .map(|(n, v)| (n as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok((None, None));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let fit = ols(&x, &y)?;
    Ok((Some(fit.intercept.exp()), Some(fit.slope.exp())))
}

/// Powers `P^n f - Pi f` computed exactly by matrix powering, with a
/// geometric fit compared against `|lambda_2|`.
pub fn spectral_gap_check(
    model: &FiniteMarkovModel,
    functions: &[Vec<f64>],
    max_power: usize,
) -> Result<SpectralGapReport> {
    let s = model.states();
    if functions.is_empty() {
        return Err(Error::Empty("test functions"));
    }
    if max_power < 2 {
        return Err(Error::OutOfRange {
            what: "max power",
            value: max_power as f64,
        });
    }
    for f in functions {
        if f.len() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                found: f.len(),
            });
        }
    }
    let p = model.transition();
    let pi = model.stationary();
    let mut power = vec![0.0; s * s];
    for i in 0..s {
        power[i * s + i] = 1.0;
    }
    let mut operator_norms = Vec::with_capacity(max_power + 1);
    let mut decays: Vec<Vec<f64>> = vec![Vec::with_capacity(max_power + 1); functions.len()];
    for _ in 0..=max_power {
        let mut op = 0.0;
        for i in 0..s {
            let row: f64 = (0..s).map(|j| (power[i * s + j] - pi[j]).abs()).sum();
            op = op.max(row);
        }
        operator_norms.push(op);
        for (f, out) in functions.iter().zip(decays.iter_mut()) {
            let mean: f64 = f.iter().zip(pi).map(|(a, b)| a * b).sum();
            let mut sup = 0.0;
            for i in 0..s {
                let pf: f64 = (0..s).map(|j| power[i * s + j] * f[j]).sum();
                sup = f64::max(sup, (pf - mean).abs());
            }
            out.push(sup);
        }
        power = mat_mul(&power, p, s);
    }
    let lambda2 = model.second_modulus();
    let no_gap = lambda2 >= 1.0 - NO_GAP_TOL;
    let mut fns = Vec::with_capacity(functions.len());
    let mut theta: Option<f64> = None;
    for (f, norms) in functions.iter().zip(decays) {
        let (kappa, th) = fit_decay(&norms)?;
        if let Some(t) = th {
            theta = Some(theta.map_or(t, |c: f64| c.max(t)));
        }
        fns.push(FunctionDecay {
            values: f.clone(),
            norms,
            kappa,
            theta: th,
        });
    }
    let kappa = theta.filter(|t| *t > 0.0).map(|t| {
        operator_norms
            .iter()
            .enumerate()
            .map(|(n, v)| v / t.powi(n as i32))
            .fold(0.0, f64::max)
    });
    let agrees = !no_gap && theta.is_some_and(|t| (t - lambda2).abs() <= RATE_AGREEMENT);
    Ok(SpectralGapReport {
        lambda2,
        no_gap,
        functions: fns,
        theta,
        operator_norms,
        kappa,
        agrees,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Key1Check {
    pub spec: BlockSpec,
    pub monte_carlo: Estimate,
    pub exact: f64,
    /// `kappa theta^{i_q} ||f(X_0)||_1`.
    pub envelope: f64,
    /// `|monte_carlo| <= envelope + 3 stderr`.
    pub within: bool,
    /// `|exact| <= envelope`.
    pub exact_within: bool,
    /// `|monte_carlo - exact| <= 3 stderr`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Key1Report {
    pub theta: f64,
    pub kappa: f64,
    pub r_norm: f64,
    pub checks: Vec<Key1Check>,
    pub holds: bool,
}

/// Block covariances of the embedded chain against the geometric envelope
/// `kappa theta^{i_q} ||f(X_0)||_1`, valid for `||f||_inf <= 1`.
///
/// `kappa` is the smallest constant with `||P^n - Pi|| <= kappa theta^n`
/// over the gaps in use, so the exact covariances sit under the envelope.
pub fn key1_envelope_check(
    model: &FiniteMarkovModel,
    f: &Observable,
    values: &[Vec<f64>],
    patterns: &[BlockSpec],
    theta: f64,
) -> Result<Key1Report> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::OutOfRange {
            what: "theta",
            value: theta,
        });
    }
    if f.sup_norm() > 1.0 {
        return Err(Error::InvalidArgument(
            "observable must satisfy ||f||_inf <= 1".into(),
        ));
    }
    let max_gap = patterns.iter().map(|p| p.gap).max().unwrap_or(0);
    let state_values: Vec<f64> = (0..model.states())
        .map(|s| f.eval(model.embedding(s)))
        .collect();
    let gap = spectral_gap_check(model, &[state_values.clone()], max_gap.max(2))?;
    let kappa = gap
        .operator_norms
        .iter()
        .enumerate()
        .map(|(n, v)| v / theta.powi(n as i32))
        .fold(0.0, f64::max);
    let r_norm: f64 = state_values
        .iter()
        .zip(model.stationary())
        .map(|(v, p)| v.abs() * p)
        .sum();
    let exact = MarkovMoments::from_state_values(model, state_values)?;
    let mut checks = Vec::with_capacity(patterns.len());
    for spec in patterns {
        let mc = block_covariance(values, spec)?;
        let ex = exact.block_covariance(spec);
        let envelope = kappa * theta.powi(spec.gap as i32) * r_norm;
        checks.push(Key1Check {
            spec: spec.clone(),
            monte_carlo: mc,
            exact: ex,
            envelope,
            within: mc.estimate.abs() <= envelope + 3.0 * mc.stderr,
            exact_within: ex.abs() <= envelope * (1.0 + 1e-12) + 1e-15,
            consistent: (mc.estimate - ex).abs() <= 3.0 * mc.stderr,
        });
    }
    let holds = checks.iter().all(|c| c.within && c.exact_within);
    Ok(Key1Report {
        theta,
        kappa,
        r_norm,
        checks,
        holds,
    })
}

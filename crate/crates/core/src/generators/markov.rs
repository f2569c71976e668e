//! Finite-state Markov chains with points of `R^d` attached to the states.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::SamplePath;
use super::torus::modulus;
use crate::error::{Error, Result};
use crate::rng::{lane, stream};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkovStart {
    Stationary,
    State(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMarkovModel {
    labels: Vec<String>,
    /// Row-major `s x s`.
    transition: Vec<f64>,
    stationary: Vec<f64>,
    second_modulus: f64,
    /// Row-major `s x d`.
    embedding: Vec<f64>,
    dim: usize,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl FiniteMarkovModel {
    pub fn new(
        transition: Vec<Vec<f64>>,
        embedding: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let s = transition.len();
        if s == 0 || transition.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidModel(
                "transition matrix must be square and nonempty".into(),
            ));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidModel(format!(
                    "row {i} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!("row {i} sums to {sum}, not 1")));
            }
        }
        if embedding.len() != s || embedding.is_empty() || embedding[0].is_empty() {
            return Err(Error::InvalidModel(
                "embedding needs one nonempty point per state".into(),
            ));
        }
        let dim = embedding[0].len();
        if embedding
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidModel(
                "embedding points must be finite and of equal dimension".into(),
            ));
        }
        let labels = match labels {
            Some(l) if l.len() == s => l,
            Some(_) => {
                return Err(Error::InvalidModel(
                    "one label per state is required".into(),
                ))
            }
            None => (0..s).map(|i| format!("s{i}")).collect(),
        };
        let flat: Vec<f64> = transition.iter().flatten().copied().collect();
        let stationary = stationary_law(&flat, s)?;
        let p = DMatrix::from_row_slice(s, s, &flat);
        let mut moduli: Vec<f64> = p.complex_eigenvalues().iter().map(|z| modulus(z)).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        let second_modulus = if s > 1 { moduli[1].min(1.0) } else { 0.0 };
        let cumulative = transition
            .iter()
            .flat_map(|r| {
                let mut acc = 0.0;
                r.iter().map(move |p| {
                    acc += p;
                    acc
                })
            })
            .collect();
        Ok(Self {
            labels,
            transition: flat,
            stationary,
            second_modulus,
            embedding: embedding.into_iter().flatten().collect(),
            dim,
            cumulative,
        })
    }

    /// Two states embedded at `0` and `1` in `R^1`, staying put with probability `stay`.
    pub fn two_state(stay: f64) -> Result<Self> {
        Self::new(
            alloc::vec![alloc::vec![stay, 1.0 - stay], alloc::vec![1.0 - stay, stay]],
            alloc::vec![alloc::vec![0.0], alloc::vec![1.0]],
            Some(alloc::vec!["a".into(), "b".into()]),
        )
    }

    pub fn states(&self) -> usize {
        self.labels.len()
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn dimension(&self) -> usize {
        self.dim
    }
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }
    pub fn second_modulus(&self) -> f64 {
        self.second_modulus
    }
    pub fn embedding(&self, state: usize) -> &[f64] {
        &self.embedding[state * self.dim..(state + 1) * self.dim]
    }
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.states(), self.states(), &self.transition)
    }

    fn step<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let s = self.states();
        let row = &self.cumulative[from * s..(from + 1) * s];
        let u: f64 = rng.random();
        row.partition_point(|c| *c <= u).min(s - 1)
    }

    /// State sequence `(S_1, ..., S_n)` after a start `S_0`.
    pub fn simulate_states(
        &self,
        n: usize,
        seed: u64,
        replicate: u64,
        start: MarkovStart,
    ) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(Error::Empty("path length"));
        }
        let mut rng = stream(seed, replicate, lane::MAIN);
        let mut state = match start {
            MarkovStart::State(i) if i < self.states() => i,
            MarkovStart::State(i) => {
                return Err(Error::IndexOutOfRange(format!("start state {i}")))
            }
            MarkovStart::Stationary => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = self.states() - 1;
                for (i, p) in self.stationary.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            }
        };
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            state = self.step(state, &mut rng);
            out.push(state);
        }
        Ok(out)
    }

    pub fn simulate(
        &self,
        n: usize,
        seed: u64,
        replicate: u64,
        start: MarkovStart,
    ) -> Result<SamplePath> {
        let states = self.simulate_states(n, seed, replicate, start)?;
        let mut values = Vec::with_capacity(n * self.dim);
        for s in states {
            values.extend_from_slice(self.embedding(s));
        }
        SamplePath::new(values, self.dim, "markov", seed, replicate)
    }
}

/// Solves `nu P = nu`, `sum nu = 1`; falls back to lazy power iteration when
/// the linear system is singular (several closed classes).
fn stationary_law(p: &[f64], s: usize) -> Result<Vec<f64>> {
    let mut a = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            a[(i, j)] = p[j * s + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(s);
    rhs[s - 1] = 1.0;
    let mut nu: Vec<f64> = match a.lu().solve(&rhs) {
        Some(v) if v.iter().all(|x| x.is_finite() && *x > -1e-12) => {
            v.iter().map(|x| x.max(0.0)).collect()
        }
        _ => {
            let mut v = alloc::vec![1.0 / s as f64; s];
            for _ in 0..200_000 {
                let mut next = alloc::vec![0.0; s];
                for i in 0..s {
                    for j in 0..s {
                        next[j] += 0.5 * v[i] * p[i * s + j];
                    }
                }
                let mut delta = 0.0f64;
                for j in 0..s {
                    next[j] += 0.5 * v[j];
                    delta = delta.max((next[j] - v[j]).abs());
                }
                v = next;
                if delta < 1e-16 {
                    break;
                }
            }
            v
        }
    };
    let total: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= total);
    let residual = (0..s)
        .map(|j| ((0..s).map(|i| nu[i] * p[i * s + j]).sum::<f64>() - nu[j]).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_TOL {
        return Err(Error::Numerical(format!(
            "stationary law residual {residual:e}"
        )));
    }
    Ok(nu)
}

//! Experiment configuration: a single JSON document, overridden by flags.

use std::path::{Path, PathBuf};

use empiproc_core::foundation::{DistributionModel, EvaluationGrid, DEFAULT_CALIBRATION_SIZE};
use empiproc_core::generators::{
    cat_map, find_quasi_hyperbolic, validate_torus, FiniteMarkovModel, IidUniform,
    LinearProcessModel, LipschitzIterationModel, MarkovStart, ProcessGenerator,
    DEFAULT_PRECISION_CAP_BITS,
};
use empiproc_core::limit::Taper;
use empiproc_core::mixing::{Observable, ObservableKind};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::io::{sha256_hex, Format};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Iid {
        d: usize,
    },
    CatMap {},
    Torus {
        matrix: Vec<Vec<i64>>,
        #[serde(default)]
        precision_cap_bits: Option<u64>,
    },
    QuasiHyperbolic {},
    Linear {
        d: usize,
        theta: f64,
        #[serde(default)]
        truncation: Option<usize>,
    },
    Lipschitz {
        d: usize,
    },
    Markov {
        transition: Vec<Vec<f64>>,
        embedding: Vec<Vec<f64>>,
        #[serde(default)]
        start: Option<MarkovStart>,
    },
    TwoState {
        stay: f64,
    },
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::Iid { d: 2 }
    }
}

impl GeneratorSpec {
    pub fn build(&self) -> AppResult<ProcessGenerator> {
        Ok(match self {
            GeneratorSpec::Iid { d } => ProcessGenerator::Iid(IidUniform::new(*d)?),
            GeneratorSpec::CatMap {} => ProcessGenerator::torus(cat_map()),
            GeneratorSpec::Torus {
                matrix,
                precision_cap_bits,
            } => {
                let t = validate_torus(matrix)?;
                if !t.is_ergodic {
                    return Err(empiproc_core::Error::NotErgodic.into());
                }
                ProcessGenerator::Torus {
                    automorphism: t,
                    precision_cap_bits: precision_cap_bits.unwrap_or(DEFAULT_PRECISION_CAP_BITS),
                }
            }
            GeneratorSpec::QuasiHyperbolic {} => ProcessGenerator::torus(
                find_quasi_hyperbolic()
                    .ok_or_else(|| AppError::Check("no quasi-hyperbolic example found".into()))?,
            ),
            GeneratorSpec::Linear {
                d,
                theta,
                truncation,
            } => ProcessGenerator::Linear(LinearProcessModel::geometric(*d, *theta, *truncation)?),
            GeneratorSpec::Lipschitz { d } => {
                ProcessGenerator::Lipschitz(LipschitzIterationModel::default_model(*d)?)
            }
            GeneratorSpec::Markov {
                transition,
                embedding,
                start,
            } => ProcessGenerator::Markov {
                model: FiniteMarkovModel::new(transition.clone(), embedding.clone(), None)?,
                start: start.unwrap_or(MarkovStart::Stationary),
            },
            GeneratorSpec::TwoState { stay } => {
                ProcessGenerator::markov(FiniteMarkovModel::two_state(*stay)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// `per_axis` equally spaced interior points of `(lo, hi)` on every axis.
    Regular {
        per_axis: usize,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
    },
    /// Explicit finite breakpoints per axis.
    Axes { axes: Vec<Vec<f64>> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Regular {
            per_axis: 4,
            lo: None,
            hi: None,
        }
    }
}

impl GridSpec {
    pub fn build(&self, d: usize) -> AppResult<EvaluationGrid> {
        Ok(match self {
            GridSpec::Regular { per_axis, lo, hi } => {
                let (lo, hi) = (lo.unwrap_or(0.0), hi.unwrap_or(1.0));
                if *per_axis == 0 || !(lo < hi) {
                    return Err(AppError::Config(
                        "regular grid needs per_axis >= 1 and lo < hi".into(),
                    ));
                }
                let step = (hi - lo) / (*per_axis as f64 + 1.0);
                let axis: Vec<f64> = (1..=*per_axis).map(|i| lo + step * i as f64).collect();
                EvaluationGrid::new(vec![axis; d])?
            }
            GridSpec::Axes { axes } => {
                if axes.len() != d {
                    return Err(AppError::Config(format!(
                        "grid has {} axes, generator has dimension {d}",
                        axes.len()
                    )));
                }
                EvaluationGrid::new(axes.clone())?
            }
        })
    }
}

/// Everything that determines a run. Reals in outputs depend only on this
/// document, never on the thread count or the clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    /// Optional consistency check against the generator's dimension.
    pub d: Option<usize>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub grid: GridSpec,
    /// Partition resolution.
    pub m: usize,
    pub alpha: f64,
    pub epsilon: f64,
    /// Moment orders for `moments`.
    pub p: Vec<u32>,
    /// Long-run covariance truncation; derived from the mixing rate when absent.
    pub lag: Option<usize>,
    pub taper: Taper,
    pub out: PathBuf,
    pub format: Format,
    /// Test function; a generator-specific default when absent.
    pub observable: Option<ObservableKind>,
    pub gaps: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub directions: Vec<Vec<f64>>,
    pub level: f64,
    pub calibration_size: usize,
    /// Random evaluation points for the chain sandwich, on top of the sample points.
    pub t_samples: usize,
    pub increment_draws: usize,
    /// Number of sampled limit fields.
    pub w_samples: usize,
    /// Dual exponent `r` of the moment bound.
    pub r: f64,
    /// Directory of `path_*` files to analyse instead of simulating.
    pub input: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorSpec::default(),
            d: None,
            n: 1024,
            replicates: 100,
            seed: 1,
            grid: GridSpec::default(),
            m: 4,
            alpha: 1.0,
            epsilon: 0.5,
            p: vec![1, 2],
            lag: None,
            taper: Taper::Bartlett,
            out: PathBuf::from("out"),
            format: Format::Csv,
            observable: None,
            gaps: (1..=16).collect(),
            n_grid: vec![64, 128, 256, 512, 1024],
            points: Vec::new(),
            directions: Vec::new(),
            level: 0.01,
            calibration_size: DEFAULT_CALIBRATION_SIZE,
            t_samples: 10_000,
            increment_draws: 20_000,
            w_samples: 10,
            r: 1.0,
            input: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> AppResult<Self> {
        serde_json::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        Self::from_json(&crate::io::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form, written into every sidecar. The
    /// output directory is left out: it does not affect any result.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        sha256_hex(
            serde_json::to_string(&canonical)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |m: &str| Err(AppError::Config(m.into()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.replicates == 0 {
            return bad("replicates must be positive");
        }
        if self.m < 2 {
            return bad("m must be at least 2");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level must lie in (0, 1)");
        }
        if !(self.r >= 1.0) {
            return bad("r must be at least 1");
        }
        if self.p.contains(&0) {
            return bad("moment orders must be positive");
        }
        Ok(())
    }

    pub fn generator(&self) -> AppResult<ProcessGenerator> {
        let g = self.generator.build()?;
        if let Some(d) = self.d {
            if d != g.dimension() {
                return Err(AppError::Config(format!(
                    "d = {d} but the generator has dimension {}",
                    g.dimension()
                )));
            }
        }
        Ok(g)
    }

    /// Evaluation points for `fidi`; the centre of the law on each axis by default.
    pub fn fidi_points(&self, model: &DistributionModel) -> AppResult<Vec<Vec<f64>>> {
        if !self.points.is_empty() {
            if self.points.iter().any(|p| p.len() != model.dimension()) {
                return Err(AppError::Config(
                    "fidi points must match the dimension".into(),
                ));
            }
            return Ok(self.points.clone());
        }
        let centre = (0..model.dimension())
            .map(|i| model.quantile(i, 0.5))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(vec![centre])
    }

    /// Directions for `fidi`; every unit vector and the all-ones vector by default.
    pub fn fidi_directions(&self, k: usize) -> AppResult<Vec<Vec<f64>>> {
        if !self.directions.is_empty() {
            if self.directions.iter().any(|a| a.len() != k) {
                return Err(AppError::Config(
                    "directions must have one entry per point".into(),
                ));
            }
            return Ok(self.directions.clone());
        }
        let mut out: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        if k > 1 {
            out.push(vec![1.0; k]);
        }
        Ok(out)
    }
}

/// Default test function for each generator family.
pub fn default_observable(generator: &ProcessGenerator) -> AppResult<Observable> {
    Ok(match generator {
        ProcessGenerator::Iid(_) | ProcessGenerator::Torus { .. } => Observable::cosine(0),
        ProcessGenerator::Linear(_) | ProcessGenerator::Lipschitz(_) => {
            Observable::odd_coordinate(0)
        }
        ProcessGenerator::Markov { model, .. } => {
            let values = (0..model.states()).map(|s| model.embedding(s)[0]).collect();
            Observable::markov_state(model, values)?
        }
    })
}

/// Configured observable centred under `model`, or the family default.
pub fn observable(
    cfg: &ExperimentConfig,
    generator: &ProcessGenerator,
    model: &DistributionModel,
) -> AppResult<Observable> {
    match &cfg.observable {
        None => default_observable(generator),
        Some(kind) => {
            let f = Observable::new(kind.clone(), 0.0, cfg.alpha)?;
            f.check_dimension(generator.dimension())?;
            Ok(f.centered_under(model, cfg.calibration_size, cfg.seed)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c =
            ExperimentConfig::from_json(r#"{"generator": {"kind": "cat_map"}, "n": 64}"#).unwrap();
        assert_eq!(c.n, 64);
        assert_eq!(c.m, 4);
        assert_eq!(c.generator().unwrap().dimension(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"nn": 3}"#),
            Err(AppError::Config(_))
        ));
        assert!(matches!(
            ExperimentConfig::from_json("{"),
            Err(AppError::Config(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let c = ExperimentConfig::from_json(r#"{"generator": {"kind": "iid", "d": 3}, "d": 2}"#)
            .unwrap();
        assert!(matches!(c.generator(), Err(AppError::Config(_))));
    }
}

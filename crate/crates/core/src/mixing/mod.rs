//! Multiple-mixing covariances, moment sums, partial-sum moment growth and
//! spectral gaps of finite chains.

pub mod covariance;
pub mod moments;
pub mod observable;
pub mod spectral;

pub use covariance::{
    block_covariance, fit_mixing_envelope, lag_covariances, BlockSpec, DegreeChoice, Estimate,
    MixingReport, MixingStatus, MIN_GAPS,
};
pub use moments::{
    cutoff_n0, in_term_count, jn_term_count, moment_relation, moment_sum_in, moment_sum_jn,
    partial_sum_moments, BoundShape, EnsembleMoments, GaussianMoments, MarkovMoments, MomentBudget,
    MomentRelation, MomentReport, MomentSum, ProductMoments, GROWTH_TOLERANCE,
    MIN_MOMENT_REPLICATES,
};
pub use observable::{summarize, Observable, ObservableKind, ObservableSummary};
pub use spectral::{
    key1_envelope_check, spectral_gap_check, FunctionDecay, Key1Check, Key1Report,
    SpectralGapReport,
};

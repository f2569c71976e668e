//! Long-run covariance of the limiting Gaussian field, sampling of the field
//! on grids and finite-dimensional normality checks of `U_n`.

pub mod fidi;
pub mod gamma;

pub use fidi::{
    fidi_normality, process_at_points, DirectionResult, FidiReport, DEGENERATE_TOL,
    MIN_FIDI_REPLICATES,
};
pub use gamma::{
    default_lag, estimate_gamma, estimate_gamma_kernels, gamma_at_points, long_run_covariance,
    psd_factor, sample_w, sample_w_field, sample_w_one, LimitModel, Taper, PSD_TOLERANCE,
};

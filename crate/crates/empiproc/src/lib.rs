//! Experiments on top of `empiproc-core`: parallel replicate ensembles,
//! JSON configuration, file formats and the `empiproc` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod number;

pub use empiproc_core as core;
pub use error::{AppError, AppResult};

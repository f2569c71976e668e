//! Replicate ensembles simulated in parallel with a fixed output order.

use empiproc_core::generators::{ProcessGenerator, SamplePath};
use empiproc_core::mixing::Observable;
use empiproc_core::Result;
use rayon::prelude::*;

/// Replicates `0..replicates` of `generator`; bit-identical for any thread count.
pub fn simulate_ensemble(
    generator: &ProcessGenerator,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<SamplePath>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| generator.simulate(n, seed, r))
        .collect()
}

/// `f(X_i)` along every path.
pub fn evaluate_ensemble(f: &Observable, paths: &[SamplePath]) -> Result<Vec<Vec<f64>>> {
    paths
        .par_iter()
        .map(|p| f.evaluate(std::slice::from_ref(p)).map(|mut v| v.remove(0)))
        .collect()
}

/// Applies `op` to every replicate in parallel, keeping replicate order.
pub fn map_replicates<T, F>(paths: &[SamplePath], op: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SamplePath) -> Result<T> + Sync + Send,
{
    paths.par_iter().map(op).collect()
}

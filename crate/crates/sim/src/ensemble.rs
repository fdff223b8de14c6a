//! Parallel ensembles. Members run on a rayon pool and are reduced in index
//! order, so results do not depend on the number of threads.

use kyle_core::engine::{
    assemble_ensemble, path_seed, run_member, run_simulation, EnsembleSummary, SimulationConfig, SimulationPath,
};
use kyle_core::kesten::{run_kesten, KestenConfig, KestenPath};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Result, SimError};

/// A pool with `jobs` threads, or one per available core.
pub fn thread_pool(jobs: Option<usize>) -> Result<ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(SimError::config("--jobs must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| SimError::config(format!("thread pool: {e}")))
}

/// Parallel counterpart of [`kyle_core::engine::run_ensemble`] with an
/// identical result.
pub fn par_run_ensemble(
    pool: &ThreadPool,
    config: &SimulationConfig,
    n_paths: usize,
    seed_stride: u64,
) -> Result<EnsembleSummary> {
    if n_paths == 0 {
        return Err(SimError::config("ensemble needs at least one path"));
    }
    config.validate()?;
    let members = pool.install(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|i| run_member(config, i, seed_stride))
            .collect::<kyle_core::Result<Vec<_>>>()
    })?;
    Ok(assemble_ensemble(members))
}

/// Full paths of an ensemble. Only member 0 keeps its rounds, and only when
/// `record_first` is set.
pub fn par_simulate_paths(
    pool: &ThreadPool,
    config: &SimulationConfig,
    n_paths: usize,
    seed_stride: u64,
    record_first: bool,
) -> Result<Vec<SimulationPath>> {
    config.validate()?;
    let paths = pool.install(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut cfg = config.clone();
                cfg.seed = path_seed(config.seed, i, seed_stride);
                cfg.record_rounds = record_first && i == 0;
                run_simulation(&cfg)
            })
            .collect::<kyle_core::Result<Vec<_>>>()
    })?;
    Ok(paths)
}

/// Kesten paths with seeds spaced like engine ensembles.
pub fn par_kesten_paths(
    pool: &ThreadPool,
    config: &KestenConfig,
    n_paths: usize,
    seed_stride: u64,
) -> Result<Vec<KestenPath>> {
    config.validate()?;
    let paths = pool.install(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let mut cfg = config.clone();
                cfg.seed = path_seed(config.seed, i, seed_stride);
                run_kesten(&cfg)
            })
            .collect::<kyle_core::Result<Vec<_>>>()
    })?;
    Ok(paths)
}

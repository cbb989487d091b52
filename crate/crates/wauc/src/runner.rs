//! Parallel drivers. Replicate `r` always draws from stream `r` of the seed
//! and results are collected in index order, so output is bit-identical to
//! the serial drivers for any thread count.

use rayon::prelude::*;
use rayon::ThreadPool;
use wauc_core::covariance::{bootstrap_from_replicates, bootstrap_replicate, check_bootstrap_args};
use wauc_core::simulation::{aggregate, replicate_outcome, Generator, ScenarioSpec, StudyReport};
use wauc_core::{BootstrapCovariance, MarkerDataset, StudyDesign, WeightMeasure};

use crate::error::{Error, Result};

/// Pool with `threads` workers; zero picks rayon's default.
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Input(format!("cannot start thread pool: {e}")))
}

pub fn run_study(spec: &ScenarioSpec, pool: &ThreadPool) -> Result<StudyReport> {
    let generator = Generator::new(spec.clone())?;
    let truth = generator.true_vector()?;
    let outcomes: Vec<_> = pool.install(|| {
        (0..spec.n_reps as u64)
            .into_par_iter()
            .map(|r| replicate_outcome(&generator, &truth, r))
            .collect()
    });
    Ok(aggregate(spec, &outcomes))
}

pub fn bootstrap_covariance(
    dataset: &MarkerDataset,
    design: StudyDesign,
    w: &WeightMeasure,
    b: usize,
    seed: u64,
    pool: &ThreadPool,
) -> Result<BootstrapCovariance> {
    check_bootstrap_args(dataset, design, w, b)?;
    let draws = pool.install(|| {
        (0..b as u64)
            .into_par_iter()
            .map(|r| bootstrap_replicate(dataset, design, w, seed, r))
            .collect::<wauc_core::Result<Vec<_>>>()
    })?;
    let redraws = draws.iter().map(|d| d.1).sum();
    let reps: Vec<Vec<f64>> = draws.into_iter().map(|d| d.0).collect();
    Ok(bootstrap_from_replicates(&reps, design.labels(), redraws)?)
}

//! Experiment orchestration, artifacts and reports.

pub mod artifacts;
pub mod config;
pub mod experiment;
pub mod report;
pub mod seeds;

pub use config::{ExperimentConfig, MetricConfig, PolicySection, Variant};
pub use experiment::*;
pub use seeds::{derive_seed, SeedSet};

pub const THREADS_ENV: &str = "STYLEBENCH_THREADS";

/// Sizes the global worker pool from `STYLEBENCH_THREADS` (default: the
/// machine's parallelism). Returns the worker count in effect.
pub fn init_thread_pool() -> crate::Result<usize> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            crate::Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))
        })?),
        Err(_) => None,
    };
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = requested {
        b = b.num_threads(n);
    }
    // a pool that already exists (tests, repeated calls) is kept as is
    let _ = b.build_global();
    Ok(rayon::current_num_threads())
}

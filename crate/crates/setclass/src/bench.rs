//! Replication-parallel driver for the benchmark harness.
//!
//! Replications are statistically independent and draw from RNG streams
//! keyed by their index, so they can run on any number of worker threads and
//! merge into a result that is identical to the sequential one.

use rayon::prelude::*;

use setclass_core::simulate::{
    benchmark_replication, summarize_benchmark, BenchmarkReport, Method, SimulationConfig,
};

use crate::Result;

/// Runs the benchmark with replications spread over a thread pool.
///
/// `threads = None` uses the available parallelism; `Some(1)` reproduces the
/// sequential path. The report does not depend on the thread count.
pub fn run_benchmark_parallel(
    config: &SimulationConfig,
    methods: &[Method],
    threads: Option<usize>,
) -> Result<BenchmarkReport> {
    config.validate().map_err(crate::Error::from)?;
    if methods.is_empty() {
        return Err(setclass_core::Error::InvalidConfig("no methods requested".into()).into());
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| setclass_core::Error::InvalidConfig(e.to_string()))?;

    let per_replication = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| benchmark_replication(config, rep as u64, methods))
            .collect::<setclass_core::Result<Vec<_>>>()
    })?;

    Ok(summarize_benchmark(config, methods, &per_replication))
}

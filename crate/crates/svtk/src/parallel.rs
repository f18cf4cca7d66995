//! Multi-threaded Monte Carlo driver.
//!
//! Trajectory `i` always draws from the stream seeded by `(seed, i)`, so the
//! split into chunks and the number of threads do not change the result.

use std::ops::Range;

use rayon::prelude::*;
use svtk_core::montecarlo::{simulate_counts, SimConfig, SimCounts, SimEstimate};
use svtk_core::RateFunction;

/// Trajectories per work item.
pub const CHUNK: u64 = 1 << 15;

fn chunks(n: u64) -> Vec<Range<u64>> {
    (0..n.div_ceil(CHUNK)).map(|k| k * CHUNK..((k + 1) * CHUNK).min(n)).collect()
}

/// Same result as [`svtk_core::montecarlo::simulate`], computed on the
/// current rayon pool.
pub fn simulate(
    lambda: &RateFunction,
    mu: &RateFunction,
    eta: &RateFunction,
    cfg: &SimConfig,
    times: &[f64],
) -> svtk_core::Result<SimEstimate> {
    cfg.validate()?;
    let parts: Vec<svtk_core::Result<SimCounts>> = chunks(cfg.n_traj)
        .into_par_iter()
        .map(|r| simulate_counts(lambda, mu, eta, cfg, times, r))
        .collect();
    let mut total = SimCounts::zeros(times.len(), cfg.bins);
    for part in parts {
        total.merge(&part?);
    }
    Ok(SimEstimate::from_counts(cfg, times, total))
}

/// Runs `f` on a pool with `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
    }
}

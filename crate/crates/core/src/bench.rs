//! Timing decomposition of a search run: initialization (dendrogram build
//! plus statistics annotation), average time per iteration, and average
//! time per scored candidate partitioning.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hierarchy::{annotate_stats, build_dendrogram, Linkage};
use crate::search::{greedy_search, SearchConfig};
use crate::stats::ScoreParams;
use crate::synth::gaussian_mixture;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub candidates: usize,
    pub initialization_seconds: f64,
    pub per_iteration_seconds: f64,
    pub per_partitioning_seconds: f64,
}

/// Times one synthetic run of size `n`. Data generation is not timed.
pub fn bench_size(n: usize, m: usize, seed: u64, iterations: usize) -> Result<BenchRecord> {
    let (data, embedding) = gaussian_mixture(n, m, seed)?;

    let started = Instant::now();
    let tree = annotate_stats(build_dendrogram(&embedding, Linkage::Ward)?, &data)?;
    let initialization_seconds = started.elapsed().as_secs_f64();

    let mut config = SearchConfig::new(ScoreParams::new(n as f64 / 2.0, 1.5)?, iterations);
    config.seed = seed;
    let (_, log) = greedy_search(&tree, &config)?;
    let total: f64 = log.iter().map(|r| r.elapsed_seconds).sum();
    let candidates: usize = log.iter().map(|r| r.candidates).sum();
    Ok(BenchRecord {
        n,
        m,
        iterations: log.len(),
        candidates,
        initialization_seconds,
        per_iteration_seconds: total / log.len().max(1) as f64,
        per_partitioning_seconds: total / candidates.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_has_positive_timings() {
        let r = bench_size(100, 3, 0, 2).unwrap();
        assert_eq!(r.iterations, 2);
        assert!(r.initialization_seconds > 0.0);
        assert!(r.per_iteration_seconds > 0.0);
        assert!(r.per_partitioning_seconds > 0.0);
    }
}

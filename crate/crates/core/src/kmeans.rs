//! Alternative candidate generator: Lloyd's k-means on the embedding for a
//! range of `k`, each result scored like a dendrogram candidate.

use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Dataset, Embedding};
use crate::error::{Error, Result};
use crate::search::{
    explain, Generator, IterationLog, IterationRecord, Partitioning, PwX, SearchConfig,
};
use crate::stats::Stats;

pub const MAX_ROUNDS: usize = 300;

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn nearest(p: &[f64; 2], centers: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding.
fn seed_centers(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every remaining point coincides with a center
            Err(_) => (0..n).find(|&i| !chosen[i]).unwrap_or(0),
        };
        chosen[next] = true;
        centers.push(points[next]);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    centers
}

/// Lloyd iterations from k-means++ seeds until the assignment is a fixed
/// point or [`MAX_ROUNDS`] rounds pass. An emptied cluster is re-seeded at
/// the point farthest from its current centroid.
pub fn lloyd(points: &[[f64; 2]], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(points, k, &mut rng);
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..MAX_ROUNDS {
        update_centers(points, &mut labels, &mut centers);
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == labels {
            return labels;
        }
        labels = next;
    }
    update_centers(points, &mut labels, &mut centers);
    labels
}

/// Recomputes centroids, moving the farthest point into any empty cluster.
fn update_centers(points: &[[f64; 2]], labels: &mut [usize], centers: &mut [[f64; 2]]) {
    let k = centers.len();
    let mut sums = vec![[0.0f64; 2]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        sums[l][0] += p[0];
        sums[l][1] += p[1];
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&i, &j| {
                sq_dist(&points[i], &centers[labels[i]])
                    .total_cmp(&sq_dist(&points[j], &centers[labels[j]]))
                    .then(j.cmp(&i))
            });
        if let Some(i) = far {
            counts[labels[i]] -= 1;
            counts[c] = 1;
            labels[i] = c;
            centers[c] = points[i];
        }
    }
}

/// Runs k-means for every `k` in the configured range and keeps the
/// partitioning with the highest explanation ratio (ties to smaller `k`).
pub fn kmeans_generate(
    embedding: &Embedding,
    dataset: &Dataset,
    config: &SearchConfig,
) -> Result<(PwX, IterationLog)> {
    if config.generator != Generator::Kmeans {
        return Err(Error::Config("k-means generator not selected".into()));
    }
    config.validate()?;
    let n = embedding.len();
    if n != dataset.n() {
        return Err(Error::Size(format!(
            "embedding has {} rows, dataset has {}",
            n,
            dataset.n()
        )));
    }
    if config.k_max > n {
        return Err(Error::Config(format!(
            "k_max {} exceeds the {} points",
            config.k_max, n
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    let global = Stats::from_rows(dataset, &all);
    let mut best: Option<PwX> = None;
    let mut log = IterationLog::new();
    for k in config.k_min..=config.k_max {
        let started = Instant::now();
        let labels = lloyd(embedding.coords(), k, config.seed);
        let partitioning =
            Partitioning::from_labels(&labels, k, |rows| Stats::from_rows(dataset, rows))?;
        let pwx = explain(partitioning, &global, config)?;
        log.push(IterationRecord {
            iteration: log.len() + 1,
            candidates: 1,
            best_node: None,
            best_ratio: pwx.ratio,
            elapsed_seconds: started.elapsed().as_secs_f64(),
            evaluated: vec![(k, pwx.ratio)],
        });
        if best.as_ref().is_none_or(|b| pwx.ratio > b.ratio) {
            best = Some(pwx);
        }
    }
    Ok((best.expect("non-empty k range"), log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ScoreParams;
    use rand_distr::Normal;

    fn blobs() -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut pts = Vec::new();
        for center in [[-20.0, 0.0], [20.0, 5.0]] {
            for _ in 0..50 {
                pts.push([
                    center[0] + noise.sample(&mut rng),
                    center[1] + noise.sample(&mut rng),
                ]);
            }
        }
        pts
    }

    #[test]
    fn separated_blobs_recovered() {
        let pts = blobs();
        let labels = lloyd(&pts, 2, 0);
        assert!(labels[..50].iter().all(|&l| l == labels[0]));
        assert!(labels[50..].iter().all(|&l| l == labels[50]));
        assert_ne!(labels[0], labels[50]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, (i * i) as f64]).collect();
        let mut labels = lloyd(&pts, 6, 3);
        labels.sort();
        assert_eq!(labels, (0..6).collect::<Vec<_>>());

        let rows: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let data = Dataset::numeric(vec!["x".into(), "y".into()], &rows).unwrap();
        let mut c = SearchConfig::new(ScoreParams::new(1.0, 1.5).unwrap(), 1);
        c.generator = Generator::Kmeans;
        c.k_min = 6;
        c.k_max = 6;
        let (pwx, _) = kmeans_generate(&Embedding::new(pts).unwrap(), &data, &c).unwrap();
        assert_eq!(pwx.partitioning.clusters.len(), 6);
        assert!(pwx.ratio.is_finite() && pwx.ratio > 0.0);
    }

    #[test]
    fn blobs_scored_with_k_range() {
        let pts = blobs();
        let rows: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let data = Dataset::numeric(vec!["x".into(), "y".into()], &rows).unwrap();
        let mut c = SearchConfig::new(ScoreParams::new(10.0, 1.5).unwrap(), 1);
        c.generator = Generator::Kmeans;
        c.k_min = 2;
        c.k_max = 4;
        let (pwx, log) = kmeans_generate(&Embedding::new(pts).unwrap(), &data, &c).unwrap();
        assert_eq!(log.len(), 3);
        let best = log.iter().map(|r| r.best_ratio).fold(0.0, f64::max);
        assert_eq!(pwx.ratio, best);
    }
}

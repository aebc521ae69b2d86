//! Brute-force reference computations, independent of the library's
//! statistics and search code paths.

#![allow(dead_code)]

use infoclus::dataset::{Dataset, Embedding};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const TOY: [[f64; 2]; 8] = [
    [4., 1.],
    [5., 2.],
    [6., 1.],
    [7., 2.],
    [1., 4.],
    [2., 5.],
    [1., 6.],
    [2., 7.],
];

/// Chain-shaped reference tree over the toy points, as merge rows.
pub const TOY_TREE: [(usize, usize, f64, usize); 7] = [
    (0, 1, 1.0, 2),
    (8, 2, 1.0, 3),
    (9, 3, 1.0, 4),
    (4, 5, 1.0, 2),
    (11, 6, 1.0, 3),
    (12, 7, 1.0, 4),
    (10, 13, 5.0, 8),
];

/// Population mean and variance of one column over `members`, two-pass.
pub fn column_stats(rows: &[Vec<f64>], members: &[usize], j: usize) -> (f64, f64) {
    let n = members.len() as f64;
    let mean = members.iter().map(|&i| rows[i][j]).sum::<f64>() / n;
    let var = members
        .iter()
        .map(|&i| (rows[i][j] - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var)
}

/// Closed-form Gaussian KL with the relative variance regularizer.
pub fn kl_closed(mp: f64, vp: f64, mq: f64, vq: f64) -> f64 {
    let eps = if vq > 0.0 { 1e-9 * vq } else { 1e-9 };
    let (vp, vq) = (vp + eps, vq + eps);
    (vq / vp).ln() / 2.0 + (vp + (mp - mq).powi(2)) / (2.0 * vq) - 0.5
}

/// Composite Simpson integration of `p ln(p/q)` over `mp +- 14 sd`.
pub fn kl_quadrature(mp: f64, vp: f64, mq: f64, vq: f64) -> f64 {
    let log_pdf = |x: f64, m: f64, v: f64| {
        -(x - m).powi(2) / (2.0 * v) - 0.5 * (2.0 * std::f64::consts::PI * v).ln()
    };
    let sd = vp.sqrt();
    let (a, b) = (mp - 14.0 * sd, mp + 14.0 * sd);
    let steps = 40_000;
    let h = (b - a) / steps as f64;
    let f = |x: f64| {
        let lp = log_pdf(x, mp, vp);
        lp.exp() * (lp - log_pdf(x, mq, vq))
    };
    let mut acc = f(a) + f(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `|c| * KL` of every attribute for the cluster `members`.
pub fn information_row(rows: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let all: Vec<usize> = (0..rows.len()).collect();
    (0..rows[0].len())
        .map(|j| {
            let (mp, vp) = column_stats(rows, members, j);
            let (mq, vq) = column_stats(rows, &all, j);
            members.len() as f64 * kl_closed(mp, vp, mq, vq)
        })
        .collect()
}

/// Best ratio over every explanation with `min_att..=max_att` attributes
/// per cluster, each attribute costing 2 parameters.
pub fn exhaustive_ratio(
    info: &[Vec<f64>],
    alpha: f64,
    beta: f64,
    min_att: usize,
    max_att: usize,
) -> (f64, Vec<Vec<usize>>) {
    let m = info[0].len();
    let subsets: Vec<Vec<usize>> = (0u32..(1 << m))
        .filter(|mask| (min_att..=max_att.min(m)).contains(&(mask.count_ones() as usize)))
        .map(|mask| (0..m).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut choice = vec![0usize; info.len()];
    loop {
        let mut total = 0.0;
        let mut params = 0usize;
        for (c, &s) in choice.iter().enumerate() {
            for &j in &subsets[s] {
                total += info[c][j];
                params += 2;
            }
        }
        let r = total / (alpha + (params as f64).powf(beta));
        if r > best.0 {
            best = (r, choice.iter().map(|&s| subsets[s].clone()).collect());
        }
        // odometer
        let mut c = 0;
        loop {
            if c == choice.len() {
                return best;
            }
            choice[c] += 1;
            if choice[c] < subsets.len() {
                break;
            }
            choice[c] = 0;
            c += 1;
        }
    }
}

/// Average ranks (ties share their mean rank).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation; 0 when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    if sx == 0.0 || sy == 0.0 {
        0.0
    } else {
        cov / (sx * sy)
    }
}

/// Uniform columns with random offsets and spreads.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    let offsets: Vec<f64> = (0..m).map(|_| rng.gen_range(-50.0..50.0)).collect();
    let scales: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..20.0)).collect();
    (0..n)
        .map(|_| {
            (0..m)
                .map(|j| offsets[j] + scales[j] * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

pub fn numeric(rows: &[Vec<f64>]) -> Dataset {
    let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
    Dataset::numeric(names, rows).unwrap()
}

/// Four jittered blobs, points assigned round-robin.
pub fn random_embedding(rng: &mut ChaCha8Rng, n: usize) -> Embedding {
    let centers: Vec<[f64; 2]> = (0..4)
        .map(|_| [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)])
        .collect();
    Embedding::new(
        (0..n)
            .map(|i| {
                let c = centers[i % 4];
                [c[0] + rng.gen::<f64>(), c[1] + rng.gen::<f64>()]
            })
            .collect(),
    )
    .unwrap()
}

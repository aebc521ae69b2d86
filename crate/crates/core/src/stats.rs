//! Sufficient statistics, their merge/split recurrences, and the
//! information-theoretic score built on top of them.
//!
//! Numeric statistics keep `(count, mean, population variance)` per
//! attribute; categorical statistics keep per-attribute category counts.
//! Both combine exactly: merging two disjoint sets or splitting a subset out
//! of a set reproduces what a direct pass over the members would give, up to
//! floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Kind, Values};
use crate::error::{Error, Result};

/// Relative variance regularizer used inside the Gaussian divergence.
pub const EPSILON: f64 = 1e-9;

/// Tolerance for negative variances produced by cancellation in a split.
pub const SPLIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NumericStats {
    pub count: usize,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalStats {
    pub count: usize,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stats {
    Numeric(NumericStats),
    Categorical(CategoricalStats),
}

/// Per-attribute distribution summary, as shown to a reader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Summary {
    Gaussian { mean: f64, variance: f64 },
    Categorical { frequencies: Vec<f64> },
}

impl NumericStats {
    pub fn empty(m: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; m],
            variance: vec![0.0; m],
        }
    }

    pub fn singleton(row: &[f64]) -> Self {
        Self {
            count: 1,
            mean: row.to_vec(),
            variance: vec![0.0; row.len()],
        }
    }
}

impl CategoricalStats {
    pub fn empty(sizes: &[usize]) -> Self {
        Self {
            count: 0,
            counts: sizes.iter().map(|&l| vec![0; l]).collect(),
        }
    }
}

impl Stats {
    pub fn count(&self) -> usize {
        match self {
            Stats::Numeric(s) => s.count,
            Stats::Categorical(s) => s.count,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Stats::Numeric(s) => s.mean.len(),
            Stats::Categorical(s) => s.counts.len(),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Stats::Numeric(_) => Kind::Numeric,
            Stats::Categorical(_) => Kind::Categorical,
        }
    }

    /// Zero-count statistics shaped for `dataset`.
    pub fn empty_for(dataset: &Dataset) -> Self {
        match dataset.values() {
            Values::Numeric(_) => Stats::Numeric(NumericStats::empty(dataset.m())),
            Values::Categorical { .. } => {
                Stats::Categorical(CategoricalStats::empty(&dataset.category_sizes()))
            }
        }
    }

    /// Statistics of the single data row `i`.
    pub fn singleton(dataset: &Dataset, i: usize) -> Self {
        match dataset.values() {
            Values::Numeric(_) => Stats::Numeric(NumericStats::singleton(
                dataset.numeric_row(i).expect("numeric row"),
            )),
            Values::Categorical { dictionaries, .. } => {
                let row = dataset.categorical_row(i).expect("categorical row");
                let counts = row
                    .iter()
                    .zip(dictionaries)
                    .map(|(&c, d)| {
                        let mut v = vec![0; d.len()];
                        v[c as usize] = 1;
                        v
                    })
                    .collect();
                Stats::Categorical(CategoricalStats { count: 1, counts })
            }
        }
    }

    /// Direct two-pass computation over the given rows.
    pub fn from_rows(dataset: &Dataset, rows: &[usize]) -> Self {
        match dataset.values() {
            Values::Numeric(_) => {
                let m = dataset.m();
                let mut s = NumericStats::empty(m);
                s.count = rows.len();
                if rows.is_empty() {
                    return Stats::Numeric(s);
                }
                for &i in rows {
                    for (acc, v) in s.mean.iter_mut().zip(dataset.numeric_row(i).unwrap()) {
                        *acc += v;
                    }
                }
                for mu in &mut s.mean {
                    *mu /= rows.len() as f64;
                }
                for &i in rows {
                    let row = dataset.numeric_row(i).unwrap();
                    for ((var, mu), v) in s.variance.iter_mut().zip(&s.mean).zip(row) {
                        let d = v - mu;
                        *var += d * d;
                    }
                }
                for var in &mut s.variance {
                    *var /= rows.len() as f64;
                }
                Stats::Numeric(s)
            }
            Values::Categorical { .. } => {
                let mut s = CategoricalStats::empty(&dataset.category_sizes());
                s.count = rows.len();
                for &i in rows {
                    for (counts, &c) in s.counts.iter_mut().zip(dataset.categorical_row(i).unwrap())
                    {
                        counts[c as usize] += 1;
                    }
                }
                Stats::Categorical(s)
            }
        }
    }

    /// Distribution summary of one attribute.
    pub fn summary(&self, attribute: usize) -> Summary {
        match self {
            Stats::Numeric(s) => Summary::Gaussian {
                mean: s.mean[attribute],
                variance: s.variance[attribute],
            },
            Stats::Categorical(s) => {
                let total = s.count.max(1) as f64;
                Summary::Categorical {
                    frequencies: s.counts[attribute]
                        .iter()
                        .map(|&c| c as f64 / total)
                        .collect(),
                }
            }
        }
    }

    /// Largest absolute or relative difference to `other` over all
    /// per-attribute parameters; `None` if shapes differ.
    pub fn max_deviation(&self, other: &Stats) -> Option<f64> {
        match (self, other) {
            (Stats::Numeric(a), Stats::Numeric(b))
                if a.count == b.count && a.mean.len() == b.mean.len() =>
            {
                let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                let mut dev: f64 = 0.0;
                for j in 0..a.mean.len() {
                    dev = dev
                        .max(rel(a.mean[j], b.mean[j]))
                        .max(rel(a.variance[j], b.variance[j]));
                }
                Some(dev)
            }
            (Stats::Categorical(a), Stats::Categorical(b)) if a.count == b.count => {
                if a.counts == b.counts {
                    Some(0.0)
                } else {
                    Some(f64::INFINITY)
                }
            }
            _ => None,
        }
    }
}

fn check_compatible(a: &Stats, b: &Stats) -> Result<()> {
    if a.kind() != b.kind() {
        return Err(Error::KindMismatch);
    }
    if a.arity() != b.arity() {
        return Err(Error::ArityMismatch {
            left: a.arity(),
            right: b.arity(),
        });
    }
    if let (Stats::Categorical(x), Stats::Categorical(y)) = (a, b) {
        for (cx, cy) in x.counts.iter().zip(&y.counts) {
            if cx.len() != cy.len() {
                return Err(Error::ArityMismatch {
                    left: cx.len(),
                    right: cy.len(),
                });
            }
        }
    }
    Ok(())
}

/// Statistics of the union of two disjoint point sets.
pub fn merge_stats(a: &Stats, b: &Stats) -> Result<Stats> {
    check_compatible(a, b)?;
    if b.count() == 0 {
        return Ok(a.clone());
    }
    if a.count() == 0 {
        return Ok(b.clone());
    }
    Ok(match (a, b) {
        (Stats::Numeric(a), Stats::Numeric(b)) => Stats::Numeric(merge_numeric(a, b)),
        (Stats::Categorical(a), Stats::Categorical(b)) => Stats::Categorical(CategoricalStats {
            count: a.count + b.count,
            counts: a
                .counts
                .iter()
                .zip(&b.counts)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
                .collect(),
        }),
        _ => unreachable!("kinds checked above"),
    })
}

fn merge_numeric(a: &NumericStats, b: &NumericStats) -> NumericStats {
    let n1 = a.count as f64;
    let n2 = b.count as f64;
    let n = n1 + n2;
    let m = a.mean.len();
    let mut mean = Vec::with_capacity(m);
    let mut variance = Vec::with_capacity(m);
    for j in 0..m {
        let d = a.mean[j] - b.mean[j];
        mean.push((n1 * a.mean[j] + n2 * b.mean[j]) / n);
        variance.push((n1 * a.variance[j] + n2 * b.variance[j]) / n + n1 * n2 * d * d / (n * n));
    }
    NumericStats {
        count: a.count + b.count,
        mean,
        variance,
    }
}

/// Statistics of `whole` with the subset `part` removed.
pub fn split_stats(whole: &Stats, part: &Stats) -> Result<Stats> {
    check_compatible(whole, part)?;
    if part.count() > whole.count() {
        return Err(Error::NegativeMass(format!(
            "subset of {} points split out of {}",
            part.count(),
            whole.count()
        )));
    }
    if part.count() == whole.count() {
        return Err(Error::EmptyComplement);
    }
    if part.count() == 0 {
        return Ok(whole.clone());
    }
    match (whole, part) {
        (Stats::Numeric(w), Stats::Numeric(p)) => split_numeric(w, p).map(Stats::Numeric),
        (Stats::Categorical(w), Stats::Categorical(p)) => {
            let mut counts = Vec::with_capacity(w.counts.len());
            for (cw, cp) in w.counts.iter().zip(&p.counts) {
                let mut out = Vec::with_capacity(cw.len());
                for (&x, &y) in cw.iter().zip(cp) {
                    out.push(x.checked_sub(y).ok_or_else(|| {
                        Error::NegativeMass(format!("category count {x} minus {y}"))
                    })?);
                }
                counts.push(out);
            }
            Ok(Stats::Categorical(CategoricalStats {
                count: w.count - p.count,
                counts,
            }))
        }
        _ => unreachable!("kinds checked above"),
    }
}

fn split_numeric(whole: &NumericStats, part: &NumericStats) -> Result<NumericStats> {
    let n = whole.count as f64;
    let n1 = part.count as f64;
    let n2 = n - n1;
    let m = whole.mean.len();
    let mut mean = Vec::with_capacity(m);
    let mut variance = Vec::with_capacity(m);
    for j in 0..m {
        let mu2 = (n * whole.mean[j] - n1 * part.mean[j]) / n2;
        let d = part.mean[j] - mu2;
        let mut var2 = (n * whole.variance[j] - n1 * part.variance[j] - n1 * n2 * d * d / n) / n2;
        if var2 < 0.0 {
            let scale = 1f64
                .max(whole.variance[j])
                .max(part.variance[j])
                .max(whole.mean[j] * whole.mean[j]);
            if var2 < -SPLIT_TOLERANCE * scale {
                return Err(Error::NegativeMass(format!(
                    "attribute {j} variance {var2:e}"
                )));
            }
            var2 = 0.0;
        }
        mean.push(mu2);
        variance.push(var2);
    }
    Ok(NumericStats {
        count: whole.count - part.count,
        mean,
        variance,
    })
}

/// `KL(N(p_mean, p_var + eps) || N(q_mean, q_var + eps))` in nats.
pub fn gaussian_kl(p_mean: f64, p_var: f64, q_mean: f64, q_var: f64, eps: f64) -> f64 {
    let vp = p_var + eps;
    let vq = q_var + eps;
    let d = p_mean - q_mean;
    let kl = 0.5 * (vq / vp).ln() + (vp + d * d) / (2.0 * vq) - 0.5;
    kl.max(0.0)
}

/// KL divergence between the empirical frequencies of two count vectors.
pub fn categorical_kl(p_counts: &[u64], q_counts: &[u64]) -> Result<f64> {
    if p_counts.len() != q_counts.len() {
        return Err(Error::ArityMismatch {
            left: p_counts.len(),
            right: q_counts.len(),
        });
    }
    let p_total: u64 = p_counts.iter().sum();
    let q_total: u64 = q_counts.iter().sum();
    if p_total == 0 || q_total == 0 {
        return Err(Error::Support);
    }
    let mut kl = 0.0;
    for (&p, &q) in p_counts.iter().zip(q_counts) {
        if p == 0 {
            continue;
        }
        if q == 0 {
            return Err(Error::Support);
        }
        let ph = p as f64 / p_total as f64;
        let qh = q as f64 / q_total as f64;
        kl += ph * (ph / qh).ln();
    }
    Ok(kl.max(0.0))
}

/// Variance regularizer for an attribute whose global variance is `q_var`.
///
/// Scaling with the reference variance keeps the divergence invariant under
/// affine rescaling of the attribute.
pub fn regularizer(q_var: f64) -> f64 {
    if q_var > 0.0 {
        EPSILON * q_var
    } else {
        EPSILON
    }
}

/// Cluster size times the divergence of the cluster's attribute
/// distribution from the global one.
pub fn information_content(cluster: &Stats, global: &Stats, attribute: usize) -> Result<f64> {
    check_compatible(cluster, global)?;
    if attribute >= cluster.arity() {
        return Err(Error::ArityMismatch {
            left: attribute,
            right: cluster.arity(),
        });
    }
    if cluster.count() == 0 {
        return Err(Error::EmptyCluster);
    }
    let size = cluster.count() as f64;
    match (cluster, global) {
        (Stats::Numeric(c), Stats::Numeric(g)) => {
            let j = attribute;
            Ok(size
                * gaussian_kl(
                    c.mean[j],
                    c.variance[j],
                    g.mean[j],
                    g.variance[j],
                    regularizer(g.variance[j]),
                ))
        }
        (Stats::Categorical(c), Stats::Categorical(g)) => {
            Ok(size * categorical_kl(&c.counts[attribute], &g.counts[attribute])?)
        }
        _ => unreachable!("kinds checked above"),
    }
}

/// Information content of every attribute, in attribute order.
pub fn information_row(cluster: &Stats, global: &Stats) -> Result<Vec<f64>> {
    (0..cluster.arity())
        .map(|j| information_content(cluster, global, j))
        .collect()
}

/// Number of distribution parameters a reader must absorb for one
/// attribute: mean and variance for a Gaussian, `L - 1` free frequencies
/// (at least one) for a categorical attribute with `L` categories.
pub fn parameter_count(kind: Kind, categories: usize) -> usize {
    match kind {
        Kind::Numeric => 2,
        Kind::Categorical => categories.saturating_sub(1).max(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ScoreParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(beta >= 1.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be >= 1, got {beta}")));
        }
        Ok(Self { alpha, beta })
    }
}

/// `alpha + total^beta`.
pub fn complexity(total_param_count: usize, params: ScoreParams) -> f64 {
    params.alpha + (total_param_count as f64).powf(params.beta)
}

/// Total information divided by complexity. An empty explanation scores 0.
pub fn explanation_ratio(information: &[f64], param_counts: &[usize], params: ScoreParams) -> f64 {
    debug_assert_eq!(information.len(), param_counts.len());
    let total: f64 = information.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    total / complexity(param_counts.iter().sum(), params)
}

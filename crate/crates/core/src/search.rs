//! Search for the partitioning with explanations of highest explanation
//! ratio among partitionings compatible with the dendrogram.
//!
//! A compatible partitioning is described by an ordered list of selected
//! dendrogram nodes. Each point belongs to the smallest selected node that
//! contains it; points under no selected node form the remainder cluster.
//! Cluster statistics are derived from node statistics with the merge/split
//! recurrences only, so evaluating a candidate never touches the raw rows.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::AnnotatedDendrogram;
use crate::stats::{
    complexity, information_row, merge_stats, parameter_count, split_stats, ScoreParams, Stats,
    Summary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    #[default]
    Hierarchical,
    Kmeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub score: ScoreParams,
    pub min_att: usize,
    pub max_att: usize,
    /// Wall-clock budget in seconds, checked before each iteration.
    pub time_budget: Option<f64>,
    pub max_iterations: Option<usize>,
    pub min_cluster_size: usize,
    pub generator: Generator,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl SearchConfig {
    /// A configuration with the usual defaults and an iteration cap.
    pub fn new(score: ScoreParams, max_iterations: usize) -> Self {
        Self {
            score,
            min_att: 1,
            max_att: 5,
            time_budget: None,
            max_iterations: Some(max_iterations),
            min_cluster_size: 2,
            generator: Generator::Hierarchical,
            k_min: 2,
            k_max: 2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ScoreParams::new(self.score.alpha, self.score.beta)?;
        if self.min_att == 0 || self.max_att == 0 {
            return Err(Error::Config("min_att and max_att must be positive".into()));
        }
        if self.min_att > self.max_att {
            return Err(Error::Config(format!(
                "min_att {} exceeds max_att {}",
                self.min_att, self.max_att
            )));
        }
        if self.min_cluster_size == 0 {
            return Err(Error::Config("min_cluster_size must be positive".into()));
        }
        match self.generator {
            Generator::Hierarchical => {
                if self.time_budget.is_none() && self.max_iterations.is_none() {
                    return Err(Error::Config(
                        "set a time budget or an iteration cap".into(),
                    ));
                }
                if let Some(t) = self.time_budget {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(Error::Config(format!("invalid time budget {t}")));
                    }
                }
            }
            Generator::Kmeans => {
                if self.k_min < 2 || self.k_min > self.k_max {
                    return Err(Error::Config(format!(
                        "invalid k range {}..={}",
                        self.k_min, self.k_max
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    pub members: Vec<usize>,
    pub stats: Stats,
    /// Selected dendrogram node this cluster was carved from.
    pub node: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partitioning {
    pub selected_nodes: Vec<usize>,
    /// Cluster id per point.
    pub assignment: Vec<usize>,
    pub clusters: Vec<Cluster>,
    pub remainder: Option<usize>,
}

impl Partitioning {
    /// Builds a partitioning from per-point labels `0..k`; statistics come
    /// from `stats_of` applied to each member list.
    pub fn from_labels(
        labels: &[usize],
        k: usize,
        mut stats_of: impl FnMut(&[usize]) -> Stats,
    ) -> Result<Self> {
        let mut members = vec![Vec::new(); k];
        for (i, &l) in labels.iter().enumerate() {
            members[l].push(i);
        }
        if members.iter().any(Vec::is_empty) {
            return Err(Error::EmptyCluster);
        }
        let clusters = members
            .into_iter()
            .enumerate()
            .map(|(id, members)| Cluster {
                id,
                stats: stats_of(&members),
                members,
                node: None,
            })
            .collect();
        Ok(Self {
            selected_nodes: Vec::new(),
            assignment: labels.to_vec(),
            clusters,
            remainder: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeExplanation {
    pub attribute: usize,
    pub information: f64,
    pub cluster_summary: Summary,
    pub global_summary: Summary,
    pub parameter_count: usize,
}

/// Per cluster, the explaining attributes in the order they were added.
pub type Explanation = Vec<Vec<AttributeExplanation>>;

#[derive(Debug, Clone, PartialEq)]
pub struct PwX {
    pub partitioning: Partitioning,
    pub explanation: Explanation,
    pub ratio: f64,
    pub total_information: f64,
    pub total_param_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Distinct candidate partitionings scored in this iteration.
    pub candidates: usize,
    pub best_node: Option<usize>,
    pub best_ratio: f64,
    pub elapsed_seconds: f64,
    /// `(node or k, ratio)` for every scored candidate, in evaluation order.
    #[serde(skip)]
    pub evaluated: Vec<(usize, f64)>,
}

pub type IterationLog = Vec<IterationRecord>;

/// Outcome of the attribute-selection greedy on an information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Per cluster, attribute indices in the order they were added.
    pub attributes: Vec<Vec<usize>>,
    pub ratio: f64,
    pub total_information: f64,
    pub total_param_count: usize,
}

/// Number of distribution parameters per attribute, read off the global
/// statistics.
pub fn parameter_counts(global: &Stats) -> Vec<usize> {
    match global {
        Stats::Numeric(s) => vec![parameter_count(global.kind(), 0); s.mean.len()],
        Stats::Categorical(s) => s
            .counts
            .iter()
            .map(|c| parameter_count(global.kind(), c.len()))
            .collect(),
    }
}

fn ratio_of(total_information: f64, total_params: usize, score: ScoreParams) -> f64 {
    if total_information == 0.0 {
        0.0
    } else {
        total_information / complexity(total_params, score)
    }
}

/// Seeds every cluster with its `min_att` most informative attributes, then
/// adds the globally most informative remaining (cluster, attribute) pair
/// while the ratio strictly improves. Ties go to the lower cluster index and
/// then the lower attribute index.
pub fn select_attributes(
    information: &[&[f64]],
    param_counts: &[usize],
    score: ScoreParams,
    min_att: usize,
    max_att: usize,
) -> Selection {
    let m = param_counts.len();
    let max_att = max_att.min(m);
    let min_att = min_att.min(max_att);
    let by_information = |row: &[f64]| {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
        order
    };

    let mut attributes = Vec::with_capacity(information.len());
    let mut total_information = 0.0;
    let mut total_params = 0;
    let mut pool: Vec<(f64, usize, usize)> = Vec::new();
    for (c, row) in information.iter().enumerate() {
        let order = by_information(row);
        for &j in &order[..min_att] {
            total_information += row[j];
            total_params += param_counts[j];
        }
        attributes.push(order[..min_att].to_vec());
        if max_att > min_att {
            pool.extend(order[min_att..].iter().map(|&j| (row[j], c, j)));
        }
    }
    let mut ratio = ratio_of(total_information, total_params, score);

    pool.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    for (info, c, j) in pool {
        if attributes[c].len() >= max_att {
            continue;
        }
        let candidate_info = total_information + info;
        let candidate_params = total_params + param_counts[j];
        let candidate = ratio_of(candidate_info, candidate_params, score);
        if candidate > ratio {
            attributes[c].push(j);
            total_information = candidate_info;
            total_params = candidate_params;
            ratio = candidate;
        } else {
            break;
        }
    }

    Selection {
        attributes,
        ratio,
        total_information,
        total_param_count: total_params,
    }
}

/// Best explanation of every cluster of `partitioning` under the
/// configured attribute bounds.
pub fn best_explanations(
    partitioning: &Partitioning,
    global: &Stats,
    config: &SearchConfig,
) -> Result<(Explanation, f64)> {
    let pwx = explain(partitioning.clone(), global, config)?;
    Ok((pwx.explanation, pwx.ratio))
}

/// Scores `partitioning` and packages it as a [`PwX`].
pub fn explain(partitioning: Partitioning, global: &Stats, config: &SearchConfig) -> Result<PwX> {
    let m = global.arity();
    if config.min_att > m {
        return Err(Error::Config(format!(
            "min_att {} exceeds the {} available attributes",
            config.min_att, m
        )));
    }
    let params = parameter_counts(global);
    let rows = partitioning
        .clusters
        .iter()
        .map(|c| information_row(&c.stats, global))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let sel = select_attributes(&refs, &params, config.score, config.min_att, config.max_att);
    let explanation = sel
        .attributes
        .iter()
        .zip(&partitioning.clusters)
        .zip(&rows)
        .map(|((attrs, cluster), row)| {
            attrs
                .iter()
                .map(|&j| AttributeExplanation {
                    attribute: j,
                    information: row[j],
                    cluster_summary: cluster.stats.summary(j),
                    global_summary: global.summary(j),
                    parameter_count: params[j],
                })
                .collect()
        })
        .collect();
    Ok(PwX {
        partitioning,
        explanation,
        ratio: sel.ratio,
        total_information: sel.total_information,
        total_param_count: sel.total_param_count,
    })
}

/// Partitioning induced by `selected` nodes: each point joins the smallest
/// selected node containing it, the rest form the remainder (listed last).
pub fn derive_partition(
    tree: &AnnotatedDendrogram,
    selected: &[usize],
    min_cluster_size: usize,
) -> Result<Partitioning> {
    let d = tree.tree();
    let root = d.root();
    let mut slot: Vec<Option<usize>> = vec![None; d.len()];
    for (i, &s) in selected.iter().enumerate() {
        if s >= d.len() {
            return Err(Error::InvalidSelection(format!("node {s} does not exist")));
        }
        if s == root {
            return Err(Error::InvalidSelection(
                "the root cannot be selected".into(),
            ));
        }
        if slot[s].is_some() {
            return Err(Error::InvalidSelection(format!("node {s} selected twice")));
        }
        slot[s] = Some(i);
    }
    let k = selected.len();
    let remainder = k;

    // Nearest selected strict ancestor of each selected node (or remainder).
    let mut enclosing = Vec::with_capacity(k);
    for &s in selected {
        let owner = d.ancestors(s).find_map(|a| slot[a]).unwrap_or(remainder);
        enclosing.push(owner);
    }

    let mut stats: Vec<Stats> = selected.iter().map(|&s| tree.stats(s).clone()).collect();
    stats.push(tree.root_stats().clone());
    for (i, &owner) in enclosing.iter().enumerate() {
        let carved = tree.stats(selected[i]);
        if carved.count() >= stats[owner].count() {
            return Err(Error::EmptyCluster);
        }
        stats[owner] = split_stats(&stats[owner], carved)?;
    }

    let mut assignment = vec![usize::MAX; d.n_leaves()];
    let mut stack = vec![(root, remainder)];
    while let Some((v, label)) = stack.pop() {
        let label = slot[v].unwrap_or(label);
        match d.node(v).children {
            Some((l, r)) => {
                stack.push((r, label));
                stack.push((l, label));
            }
            None => assignment[v] = label,
        }
    }
    let mut members = vec![Vec::new(); k + 1];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }

    let clusters: Vec<Cluster> = members
        .into_iter()
        .zip(stats)
        .enumerate()
        .map(|(id, (members, stats))| Cluster {
            id,
            members,
            stats,
            node: selected.get(id).copied(),
        })
        .collect();
    for c in &clusters {
        if c.members.is_empty() {
            return Err(Error::EmptyCluster);
        }
        if c.members.len() < min_cluster_size {
            return Err(Error::MinSize {
                size: c.members.len(),
                min: min_cluster_size,
            });
        }
    }
    Ok(Partitioning {
        selected_nodes: selected.to_vec(),
        assignment,
        clusters,
        remainder: Some(remainder),
    })
}

/// Order-independent 128-bit fingerprints of every node's leaf set: each
/// leaf draws a random value and a node sums its leaves' values, so a
/// cluster's fingerprint is obtained by subtraction just like its
/// statistics.
fn node_fingerprints(tree: &AnnotatedDendrogram) -> Vec<u128> {
    let d = tree.tree();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1f0c_1a55);
    let mut out: Vec<u128> = (0..d.n_leaves())
        .map(|_| ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128)
        .collect();
    for v in d.n_leaves()..d.len() {
        let (l, r) = d.node(v).children.expect("internal node");
        out.push(out[l].wrapping_add(out[r]));
    }
    out
}

/// Statistics and fingerprint of the selected nodes directly beneath a node.
struct Carved {
    stats: Stats,
    fingerprint: u128,
}

struct Candidate {
    node: usize,
    parent_cluster: usize,
}

/// Greedy search over dendrogram-compatible partitionings: each iteration
/// carves one more node out of the best partitioning found so far.
pub fn greedy_search(
    tree: &AnnotatedDendrogram,
    config: &SearchConfig,
) -> Result<(PwX, IterationLog)> {
    config.validate()?;
    let start = Instant::now();
    let budget = config.time_budget.map(Duration::from_secs_f64);
    let d = tree.tree();
    let root = d.root();
    let global = tree.root_stats();
    if config.min_att > global.arity() {
        return Err(Error::Config(format!(
            "min_att {} exceeds the {} available attributes",
            config.min_att,
            global.arity()
        )));
    }
    let params = parameter_counts(global);
    let fingerprint = node_fingerprints(tree);

    let mut alive: Vec<bool> = (0..d.len())
        .map(|v| v != root && d.node(v).count >= config.min_cluster_size)
        .collect();
    let mut alive_count = alive.iter().filter(|&&a| a).count();

    // Current partitioning: selected clusters in order, remainder last.
    let mut selected: Vec<usize> = Vec::new();
    let mut cluster_stats: Vec<Stats> = vec![global.clone()];
    let mut cluster_fp: Vec<u128> = vec![fingerprint[root]];
    let mut cluster_info: Vec<Vec<f64>> = vec![information_row(global, global)?];

    let mut best_selection: Vec<usize> = Vec::new();
    let mut best_ratio = 0.0;
    let mut log = IterationLog::new();

    loop {
        if let Some(cap) = config.max_iterations {
            if log.len() >= cap {
                break;
            }
        }
        if let Some(b) = budget {
            if start.elapsed() >= b {
                break;
            }
        }
        if alive_count == 0 {
            break;
        }
        let iteration_start = Instant::now();
        let k = selected.len();
        let remainder = k;

        let mut slot: Vec<Option<usize>> = vec![None; d.len()];
        for (i, &s) in selected.iter().enumerate() {
            slot[s] = Some(i);
        }
        // Cluster that currently owns each node's points.
        let mut owner = vec![remainder; d.len()];
        for v in (d.n_leaves()..d.len()).rev() {
            let (l, r) = d.node(v).children.expect("internal node");
            let here = slot[v].unwrap_or(owner[v]);
            owner[l] = here;
            owner[r] = here;
        }
        // Selected nodes directly beneath each node, accumulated upward
        // until the next selected node.
        let mut carved: Vec<Option<Carved>> = (0..d.len()).map(|_| None).collect();
        for &s in &selected {
            for a in d.ancestors(s) {
                let entry = match carved[a].take() {
                    None => Carved {
                        stats: tree.stats(s).clone(),
                        fingerprint: fingerprint[s],
                    },
                    Some(c) => Carved {
                        stats: merge_stats(&c.stats, tree.stats(s))?,
                        fingerprint: c.fingerprint.wrapping_add(fingerprint[s]),
                    },
                };
                carved[a] = Some(entry);
                if slot[a].is_some() {
                    break;
                }
            }
        }

        let mut seen: HashSet<(usize, u128, u128)> = HashSet::new();
        let mut candidates = Vec::new();
        for v in 0..d.len() {
            if !alive[v] {
                continue;
            }
            let (below_count, below_fp) = carved[v]
                .as_ref()
                .map_or((0, 0), |c| (c.stats.count(), c.fingerprint));
            let new_count = d.node(v).count - below_count;
            let parent = owner[v];
            let parent_count = cluster_stats[parent].count();
            if new_count == 0 || new_count >= parent_count {
                continue;
            }
            let rest_count = parent_count - new_count;
            if new_count < config.min_cluster_size || rest_count < config.min_cluster_size {
                continue;
            }
            // Two candidates give the same partitioning exactly when they
            // split the same cluster into the same pair of point sets.
            let new_fp = fingerprint[v].wrapping_sub(below_fp);
            let rest_fp = cluster_fp[parent].wrapping_sub(new_fp);
            let key = (parent, new_fp.min(rest_fp), new_fp.max(rest_fp));
            if seen.insert(key) {
                candidates.push(Candidate {
                    node: v,
                    parent_cluster: parent,
                });
            }
        }

        if candidates.is_empty() {
            if log.is_empty() {
                return Err(Error::NoCandidate);
            }
            break;
        }

        let scored: Vec<(f64, Stats, Stats)> = candidates
            .par_iter()
            .map(|cand| {
                let new_stats = match &carved[cand.node] {
                    Some(c) => split_stats(tree.stats(cand.node), &c.stats)?,
                    None => tree.stats(cand.node).clone(),
                };
                let rest_stats = split_stats(&cluster_stats[cand.parent_cluster], &new_stats)?;
                let new_info = information_row(&new_stats, global)?;
                let rest_info = information_row(&rest_stats, global)?;
                let mut rows: Vec<&[f64]> = Vec::with_capacity(k + 2);
                for (i, info) in cluster_info.iter().enumerate().take(k) {
                    rows.push(if i == cand.parent_cluster {
                        &rest_info
                    } else {
                        info
                    });
                }
                rows.push(&new_info);
                rows.push(if cand.parent_cluster == remainder {
                    &rest_info
                } else {
                    &cluster_info[remainder]
                });
                let sel =
                    select_attributes(&rows, &params, config.score, config.min_att, config.max_att);
                Ok((sel.ratio, new_stats, rest_stats))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut winner = 0;
        for (i, s) in scored.iter().enumerate() {
            if s.0 > scored[winner].0 {
                winner = i;
            }
        }
        let chosen = &candidates[winner];
        let (iteration_best, new_stats, rest_stats) = scored[winner].clone();

        // Apply the winning split.
        let parent = chosen.parent_cluster;
        let new_fp = fingerprint[chosen.node]
            .wrapping_sub(carved[chosen.node].as_ref().map_or(0, |c| c.fingerprint));
        cluster_fp[parent] = cluster_fp[parent].wrapping_sub(new_fp);
        cluster_info[parent] = information_row(&rest_stats, global)?;
        cluster_stats[parent] = rest_stats;
        let new_info = information_row(&new_stats, global)?;
        cluster_stats.insert(k, new_stats);
        cluster_fp.insert(k, new_fp);
        cluster_info.insert(k, new_info);
        selected.push(chosen.node);

        if iteration_best > best_ratio {
            best_ratio = iteration_best;
            best_selection = selected.clone();
        }

        for v in std::iter::once(chosen.node).chain(d.ancestors(chosen.node)) {
            if alive[v] {
                alive[v] = false;
                alive_count -= 1;
            }
        }

        log.push(IterationRecord {
            iteration: log.len() + 1,
            candidates: candidates.len(),
            best_node: Some(chosen.node),
            best_ratio: iteration_best,
            elapsed_seconds: iteration_start.elapsed().as_secs_f64(),
            evaluated: candidates
                .iter()
                .zip(&scored)
                .map(|(c, s)| (c.node, s.0))
                .collect(),
        });
    }

    let partitioning = derive_partition(tree, &best_selection, 1)?;
    let pwx = explain(partitioning, global, config)?;
    Ok((pwx, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, Embedding};
    use crate::hierarchy::{annotate_stats, build_dendrogram, Dendrogram, Linkage, Merge};

    fn toy_rows() -> Vec<Vec<f64>> {
        vec![
            vec![4., 1.],
            vec![5., 2.],
            vec![6., 1.],
            vec![7., 2.],
            vec![1., 4.],
            vec![2., 5.],
            vec![1., 6.],
            vec![2., 7.],
        ]
    }

    fn toy_tree() -> Dendrogram {
        let m = |left, right, height, count| Merge {
            left,
            right,
            height,
            count,
        };
        Dendrogram::from_merges(
            8,
            &[
                m(0, 1, 1.0, 2),
                m(8, 2, 1.0, 3),
                m(9, 3, 1.0, 4),
                m(4, 5, 1.0, 2),
                m(11, 6, 1.0, 3),
                m(12, 7, 1.0, 4),
                m(10, 13, 5.0, 8),
            ],
        )
        .unwrap()
    }

    fn fixture() -> (Dataset, AnnotatedDendrogram) {
        let data = Dataset::numeric(vec!["a1".into(), "a2".into()], &toy_rows()).unwrap();
        let tree = annotate_stats(toy_tree(), &data).unwrap();
        (data, tree)
    }

    fn toy_config() -> SearchConfig {
        let mut c = SearchConfig::new(ScoreParams::new(1.0, 2.0).unwrap(), 1);
        c.max_att = 2;
        c
    }

    #[test]
    fn derive_single_node() {
        let (_, tree) = fixture();
        let p = derive_partition(&tree, &[10], 2).unwrap();
        assert_eq!(p.clusters.len(), 2);
        assert_eq!(p.clusters[0].members, vec![0, 1, 2, 3]);
        assert_eq!(p.clusters[1].members, vec![4, 5, 6, 7]);
        assert_eq!(p.remainder, Some(1));
    }

    #[test]
    fn derive_nested_nodes() {
        let (data, tree) = fixture();
        let p = derive_partition(&tree, &[10, 8], 2).unwrap();
        let members: Vec<_> = p.clusters.iter().map(|c| c.members.clone()).collect();
        assert_eq!(members, vec![vec![2, 3], vec![0, 1], vec![4, 5, 6, 7]]);
        for c in &p.clusters {
            let direct = Stats::from_rows(&data, &c.members);
            assert!(c.stats.max_deviation(&direct).unwrap() < 1e-12);
        }
    }

    #[test]
    fn derive_trivial_and_errors() {
        let (_, tree) = fixture();
        let p = derive_partition(&tree, &[], 2).unwrap();
        assert_eq!(p.clusters.len(), 1);
        assert_eq!(p.clusters[0].members, (0..8).collect::<Vec<_>>());
        assert!(matches!(
            derive_partition(&tree, &[10, 13], 2),
            Err(Error::EmptyCluster)
        ));
        assert_eq!(
            derive_partition(&tree, &[9], 2).unwrap().clusters[0].members,
            vec![0, 1, 2]
        );
        assert!(matches!(
            derive_partition(&tree, &[10, 9], 2),
            Err(Error::MinSize { size: 1, min: 2 })
        ));
        assert!(matches!(
            derive_partition(&tree, &[14], 2),
            Err(Error::InvalidSelection(_))
        ));
        assert!(matches!(
            derive_partition(&tree, &[8, 8], 2),
            Err(Error::InvalidSelection(_))
        ));
    }

    #[test]
    fn explanation_on_toy_partition() {
        let (_, tree) = fixture();
        let p = derive_partition(&tree, &[10], 2).unwrap();
        let (e, ratio) = best_explanations(&p, tree.root_stats(), &toy_config()).unwrap();
        assert_eq!(
            e[0].iter().map(|a| a.attribute).collect::<Vec<_>>(),
            vec![1]
        );
        assert_eq!(
            e[1].iter().map(|a| a.attribute).collect::<Vec<_>>(),
            vec![0]
        );
        assert!((ratio - 0.668042).abs() < 1e-6);
    }

    #[test]
    fn explanation_on_trivial_partition() {
        let (_, tree) = fixture();
        let p = derive_partition(&tree, &[], 2).unwrap();
        let (e, ratio) = best_explanations(&p, tree.root_stats(), &toy_config()).unwrap();
        assert_eq!(ratio, 0.0);
        assert_eq!(e[0].len(), 1);
    }

    #[test]
    fn explanation_bounds_collapse() {
        let (_, tree) = fixture();
        let p = derive_partition(&tree, &[10], 2).unwrap();
        let mut c = toy_config();
        c.min_att = 2;
        c.max_att = 2;
        let (e, ratio) = best_explanations(&p, tree.root_stats(), &c).unwrap();
        assert!(e.iter().all(|attrs| attrs.len() == 2));
        assert!((ratio - 2.0 * (5.678353 + 2.880530) / 65.0).abs() < 1e-6);
    }

    #[test]
    fn greedy_first_iteration_on_fixture() {
        let (_, tree) = fixture();
        let (pwx, log) = greedy_search(&tree, &toy_config()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].candidates, 5);
        let nodes: Vec<usize> = log[0].evaluated.iter().map(|e| e.0).collect();
        assert_eq!(nodes, vec![8, 9, 10, 11, 12]);
        assert_eq!(log[0].best_node, Some(10));
        assert_eq!(pwx.partitioning.selected_nodes, vec![10]);
        assert!((pwx.ratio - 0.668042).abs() < 1e-6);
        let r: Vec<f64> = log[0].evaluated.iter().map(|e| e.1).collect();
        assert!((r[0] - r[3]).abs() < 1e-9 && (r[1] - r[4]).abs() < 1e-9);
    }

    #[test]
    fn greedy_runs_until_candidates_exhausted() {
        let (_, tree) = fixture();
        let mut c = toy_config();
        c.max_iterations = Some(100);
        let (pwx, log) = greedy_search(&tree, &c).unwrap();
        assert!(log.len() >= 2);
        for w in log.windows(2) {
            assert!(w[1].iteration > w[0].iteration);
        }
        assert!(log.iter().all(|r| r.best_ratio <= pwx.ratio + 1e-12));
    }

    #[test]
    fn no_candidate_error() {
        let data = Dataset::numeric(vec!["a".into()], &[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let e = Embedding::new(vec![[0., 0.], [1., 0.], [5., 0.]]).unwrap();
        let tree = annotate_stats(build_dendrogram(&e, Linkage::Ward).unwrap(), &data).unwrap();
        let c = SearchConfig::new(ScoreParams::new(1.0, 2.0).unwrap(), 3);
        assert!(matches!(greedy_search(&tree, &c), Err(Error::NoCandidate)));
    }

    #[test]
    fn config_validation() {
        let mut c = toy_config();
        c.max_iterations = None;
        assert!(c.validate().is_err());
        let mut c = toy_config();
        c.min_att = 3;
        assert!(c.validate().is_err());
        let mut c = toy_config();
        c.generator = Generator::Kmeans;
        c.k_min = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn select_attributes_skips_full_clusters() {
        let params = [2, 2, 2];
        let rows: Vec<&[f64]> = vec![&[10.0, 9.0, 8.0], &[0.1, 0.2, 0.3]];
        let s = select_attributes(&rows, &params, ScoreParams::new(1000.0, 1.0).unwrap(), 1, 2);
        assert_eq!(s.attributes[0], vec![0, 1]);
        assert_eq!(s.attributes[1], vec![2, 1]);
    }
}

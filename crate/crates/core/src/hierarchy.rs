//! Agglomerative clustering of the embedding into a binary merge tree, and
//! bottom-up annotation of every node with sufficient statistics.
//!
//! Node numbering follows the usual linkage-matrix convention: leaves are
//! `0..n`, the `i`-th merge creates node `n + i`, and the root is `2n - 2`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{parse_number, Dataset, Embedding};
use crate::error::{Error, Result};
use crate::stats::{merge_stats, Stats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Single,
    Complete,
    Average,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ward" => Ok(Linkage::Ward),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Config(format!("unknown linkage {other:?}"))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Ward => "ward",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

/// One row of a linkage matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub children: Option<(usize, usize)>,
    pub height: f64,
    pub count: usize,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    nodes: Vec<Node>,
}

impl Dendrogram {
    /// Builds the tree from merge rows given in merge order.
    pub fn from_merges(n: usize, merges: &[Merge]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dendrogram(format!(
                "need at least 2 leaves, got {n}"
            )));
        }
        if merges.len() != n - 1 {
            return Err(Error::Dendrogram(format!(
                "{} leaves need {} merges, got {}",
                n,
                n - 1,
                merges.len()
            )));
        }
        let mut nodes: Vec<Node> = (0..n)
            .map(|_| Node {
                children: None,
                height: 0.0,
                count: 1,
                parent: None,
            })
            .collect();
        for (i, m) in merges.iter().enumerate() {
            let id = n + i;
            for child in [m.left, m.right] {
                if child >= id {
                    return Err(Error::Dendrogram(format!(
                        "merge {i} references node {child} before it exists"
                    )));
                }
                if nodes[child].parent.is_some() {
                    return Err(Error::Dendrogram(format!(
                        "node {child} is merged more than once"
                    )));
                }
            }
            if m.left == m.right {
                return Err(Error::Dendrogram(format!(
                    "merge {i} joins node {} with itself",
                    m.left
                )));
            }
            let count = nodes[m.left].count + nodes[m.right].count;
            if m.count != count {
                return Err(Error::Dendrogram(format!(
                    "merge {i} declares {} points, children hold {count}",
                    m.count
                )));
            }
            if !(m.height >= 0.0 && m.height.is_finite()) {
                return Err(Error::Dendrogram(format!("merge {i} has invalid height")));
            }
            nodes[m.left].parent = Some(id);
            nodes[m.right].parent = Some(id);
            nodes.push(Node {
                children: Some((m.left, m.right)),
                height: m.height,
                count,
                parent: None,
            });
        }
        Ok(Self { n, nodes })
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        id < self.n
    }

    /// Leaf indices under `id`, left to right.
    pub fn leaves(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].count);
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            match self.nodes[v].children {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(v),
            }
        }
        out
    }

    /// Strict ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.nodes[id].parent, move |&p| self.nodes[p].parent)
    }

    pub fn is_ancestor(&self, ancestor: usize, id: usize) -> bool {
        self.ancestors(id).any(|a| a == ancestor)
    }

    pub fn merges(&self) -> Vec<Merge> {
        self.nodes[self.n..]
            .iter()
            .map(|node| {
                let (left, right) = node.children.expect("internal node");
                Merge {
                    left,
                    right,
                    height: node.height,
                    count: node.count,
                }
            })
            .collect()
    }

    /// Writes `left_child,right_child,height,count` rows in merge order.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        writeln!(w, "left_child,right_child,height,count").map_err(io_err)?;
        for m in self.merges() {
            writeln!(w, "{},{},{:?},{}", m.left, m.right, m.height, m.count).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Reads a merge-order fixture CSV (`left_child,right_child,height,count`,
/// header optional).
pub fn load_dendrogram(path: &Path) -> Result<Dendrogram> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut merges = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|t| parse_number(t)).collect();
        let values = match parsed {
            Some(v) => v,
            None if line_no == 0 => continue,
            None => {
                return Err(Error::Parse(format!(
                    "dendrogram line {}: non-numeric field",
                    line_no + 1
                )))
            }
        };
        if values.len() != 4 {
            return Err(Error::Parse(format!(
                "dendrogram line {}: expected 4 fields, got {}",
                line_no + 1,
                values.len()
            )));
        }
        let as_index = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Parse(format!(
                    "dendrogram line {}: {v} is not a node index",
                    line_no + 1
                )))
            }
        };
        merges.push(Merge {
            left: as_index(values[0])?,
            right: as_index(values[1])?,
            height: values[2],
            count: as_index(values[3])?,
        });
    }
    Dendrogram::from_merges(merges.len() + 1, &merges)
}

/// Agglomerates the embedding points bottom-up under Euclidean distance.
pub fn build_dendrogram(embedding: &Embedding, linkage: Linkage) -> Result<Dendrogram> {
    let points = embedding.coords();
    let n = points.len();
    if n < 2 {
        return Err(Error::Size(format!("need at least 2 points, got {n}")));
    }
    let raw = match linkage {
        Linkage::Single => {
            let mut edges = single_linkage(points);
            edges.sort_by(|x, y| x.height.total_cmp(&y.height));
            edges
        }
        Linkage::Ward => nn_chain(&mut WardState::new(points), n),
        Linkage::Complete => nn_chain(&mut MatrixState::new(points, false), n),
        Linkage::Average => nn_chain(&mut MatrixState::new(points, true), n),
    };
    let raw = match linkage {
        Linkage::Single => raw,
        _ => monotone_order(n, raw),
    };
    Dendrogram::from_merges(n, &relabel(n, &raw))
}

/// A merge between the clusters holding two representative leaves.
struct RawMerge {
    a: usize,
    b: usize,
    height: f64,
}

/// Prim's minimum spanning tree; the first minimum in index order wins.
fn single_linkage(points: &[[f64; 2]]) -> Vec<RawMerge> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = sq_dist(&points[current], &points[j]);
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
            if best[j] < next_d || next == usize::MAX {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(RawMerge {
            a: from[next],
            b: next,
            height: next_d.sqrt(),
        });
        current = next;
    }
    edges
}

fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Inter-cluster dissimilarity state for the nearest-neighbour chain. Slots
/// are leaf indices; merging `a` into `b` leaves the union in slot `b`.
trait ChainState {
    fn dissimilarity(&self, a: usize, b: usize) -> f64;
    fn merge(&mut self, a: usize, b: usize, active: &[usize]);
    fn height(&self, dissimilarity: f64) -> f64;
}

struct WardState {
    centroid: Vec<[f64; 2]>,
    size: Vec<f64>,
}

impl WardState {
    fn new(points: &[[f64; 2]]) -> Self {
        Self {
            centroid: points.to_vec(),
            size: vec![1.0; points.len()],
        }
    }
}

impl ChainState for WardState {
    fn dissimilarity(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.size[a], self.size[b]);
        2.0 * na * nb / (na + nb) * sq_dist(&self.centroid[a], &self.centroid[b])
    }

    fn merge(&mut self, a: usize, b: usize, _active: &[usize]) {
        let (na, nb) = (self.size[a], self.size[b]);
        let n = na + nb;
        let (ca, cb) = (self.centroid[a], self.centroid[b]);
        self.centroid[b] = [(na * ca[0] + nb * cb[0]) / n, (na * ca[1] + nb * cb[1]) / n];
        self.size[b] = n;
    }

    fn height(&self, d: f64) -> f64 {
        d.sqrt()
    }
}

/// Condensed distance matrix with Lance-Williams updates.
struct MatrixState {
    n: usize,
    dist: Vec<f64>,
    size: Vec<f64>,
    average: bool,
}

impl MatrixState {
    fn new(points: &[[f64; 2]], average: bool) -> Self {
        let n = points.len();
        let mut dist = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                dist.push(sq_dist(&points[i], &points[j]).sqrt());
            }
        }
        Self {
            n,
            dist,
            size: vec![1.0; n],
            average,
        }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }
}

impl ChainState for MatrixState {
    fn dissimilarity(&self, a: usize, b: usize) -> f64 {
        self.dist[self.index(a, b)]
    }

    fn merge(&mut self, a: usize, b: usize, active: &[usize]) {
        let (na, nb) = (self.size[a], self.size[b]);
        for &c in active {
            if c == a || c == b {
                continue;
            }
            let dac = self.dist[self.index(a, c)];
            let dbc = self.dist[self.index(b, c)];
            let updated = if self.average {
                (na * dac + nb * dbc) / (na + nb)
            } else {
                dac.max(dbc)
            };
            let idx = self.index(b, c);
            self.dist[idx] = updated;
        }
        self.size[b] = na + nb;
    }

    fn height(&self, d: f64) -> f64 {
        d
    }
}

/// Nearest-neighbour chain agglomeration for reducible linkages. Ties go to
/// the previous chain element, then to the lowest cluster id (ids are
/// assigned in creation order).
fn nn_chain<S: ChainState>(state: &mut S, n: usize) -> Vec<RawMerge> {
    let mut id: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut position: Vec<usize> = (0..n).collect();
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        if chain.is_empty() {
            let start = *active
                .iter()
                .min_by_key(|&&s| id[s])
                .expect("non-empty active set");
            chain.push(start);
        }
        let a = *chain.last().unwrap();
        let prev = if chain.len() >= 2 {
            Some(chain[chain.len() - 2])
        } else {
            None
        };

        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        if let Some(p) = prev {
            best = p;
            best_d = state.dissimilarity(a, p);
        }
        for &c in &active {
            if c == a || Some(c) == prev {
                continue;
            }
            let d = state.dissimilarity(a, c);
            let take = if best == usize::MAX || d < best_d {
                true
            } else {
                d == best_d && Some(best) != prev && id[c] < id[best]
            };
            if take {
                best = c;
                best_d = d;
            }
        }

        if Some(best) == prev {
            chain.pop();
            chain.pop();
            let (a, b) = (a, best);
            merges.push(RawMerge {
                a,
                b,
                height: state.height(best_d),
            });
            // slot a retires, slot b holds the union
            let pos = position[a];
            active.swap_remove(pos);
            if pos < active.len() {
                position[active[pos]] = pos;
            }
            state.merge(a, b, &active);
            id[b] = n + merges.len() - 1;
        } else {
            chain.push(best);
        }
    }
    merges
}

/// Sorts chain merges by height, children before parents on ties.
fn monotone_order(n: usize, raw: Vec<RawMerge>) -> Vec<RawMerge> {
    // Raw merges reference leaf slots, so a merge's children are the latest
    // earlier merges touching either slot. Heights are made monotone along
    // that relation before sorting so rounding cannot invert a parent and
    // its child.
    let mut last_merge_of_slot: Vec<Option<usize>> = vec![None; n];
    let mut raw = raw;
    for i in 0..raw.len() {
        let mut h = raw[i].height;
        for slot in [raw[i].a, raw[i].b] {
            if let Some(c) = last_merge_of_slot[slot] {
                h = h.max(raw[c].height);
            }
        }
        raw[i].height = h;
        last_merge_of_slot[raw[i].a] = Some(i);
        last_merge_of_slot[raw[i].b] = Some(i);
    }
    raw.sort_by(|x, y| x.height.total_cmp(&y.height));
    raw
}

/// Assigns node ids to height-ordered merges through a union-find over the
/// leaves.
fn relabel(n: usize, raw: &[RawMerge]) -> Vec<Merge> {
    let mut uf = UnionFind::new(n);
    let mut out = Vec::with_capacity(raw.len());
    for (step, m) in raw.iter().enumerate() {
        let (ra, rb) = (uf.find(m.a), uf.find(m.b));
        let (la, lb) = (uf.label[ra], uf.label[rb]);
        let (left, right) = if la < lb { (la, lb) } else { (lb, la) };
        let count = uf.size[ra] + uf.size[rb];
        let root = uf.union(ra, rb);
        uf.label[root] = n + step;
        out.push(Merge {
            left,
            right,
            height: m.height,
            count,
        });
    }
    out
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    label: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            label: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (big, small) = if self.size[a] >= self.size[b] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        big
    }
}

/// A dendrogram whose every node carries the statistics of its leaves.
#[derive(Debug, Clone)]
pub struct AnnotatedDendrogram {
    tree: Dendrogram,
    stats: Vec<Stats>,
}

impl AnnotatedDendrogram {
    pub fn tree(&self) -> &Dendrogram {
        &self.tree
    }

    pub fn stats(&self, node: usize) -> &Stats {
        &self.stats[node]
    }

    pub fn root_stats(&self) -> &Stats {
        &self.stats[self.tree.root()]
    }
}

/// Singleton statistics at the leaves, merged upward in one pass.
pub fn annotate_stats(dendrogram: Dendrogram, dataset: &Dataset) -> Result<AnnotatedDendrogram> {
    if dendrogram.n_leaves() != dataset.n() {
        return Err(Error::Size(format!(
            "dendrogram has {} leaves, dataset has {} rows",
            dendrogram.n_leaves(),
            dataset.n()
        )));
    }
    let mut stats: Vec<Stats> = Vec::with_capacity(dendrogram.len());
    for i in 0..dendrogram.n_leaves() {
        stats.push(Stats::singleton(dataset, i));
    }
    for node in &dendrogram.nodes[dendrogram.n..] {
        let (l, r) = node.children.expect("internal node");
        let merged = merge_stats(&stats[l], &stats[r])?;
        stats.push(merged);
    }
    Ok(AnnotatedDendrogram {
        tree: dendrogram,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::NumericStats;

    pub(crate) fn toy_points() -> Vec<[f64; 2]> {
        vec![
            [4., 1.],
            [5., 2.],
            [6., 1.],
            [7., 2.],
            [1., 4.],
            [2., 5.],
            [1., 6.],
            [2., 7.],
        ]
    }

    fn member_sets(d: &Dendrogram) -> Vec<Vec<usize>> {
        (d.n_leaves()..d.len())
            .map(|id| {
                let mut l = d.leaves(id);
                l.sort();
                l
            })
            .collect()
    }

    #[test]
    fn three_points_single() {
        let e = Embedding::new(vec![[0., 0.], [1., 0.], [3., 0.]]).unwrap();
        let d = build_dendrogram(&e, Linkage::Single).unwrap();
        assert_eq!(member_sets(&d), vec![vec![0, 1], vec![0, 1, 2]]);
        assert_eq!(d.node(3).height, 1.0);
        assert_eq!(d.node(4).height, 2.0);
    }

    #[test]
    fn toy_single_linkage_matches_reference_tree() {
        let e = Embedding::new(toy_points()).unwrap();
        let d = build_dendrogram(&e, Linkage::Single).unwrap();
        assert_eq!(
            member_sets(&d),
            vec![
                vec![0, 1],
                vec![0, 1, 2],
                vec![0, 1, 2, 3],
                vec![4, 5],
                vec![4, 5, 6],
                vec![4, 5, 6, 7],
                (0..8).collect(),
            ]
        );
        assert_eq!(d.node(9).children, Some((2, 8)));
    }

    #[test]
    fn two_points_every_linkage() {
        let e = Embedding::new(vec![[0., 0.], [3., 4.]]).unwrap();
        for l in [
            Linkage::Ward,
            Linkage::Single,
            Linkage::Complete,
            Linkage::Average,
        ] {
            let d = build_dendrogram(&e, l).unwrap();
            assert_eq!(d.len(), 3);
            assert_eq!(d.node(2).children, Some((0, 1)));
            assert!((d.node(2).height - 5.0).abs() < 1e-12, "{l}");
        }
    }

    #[test]
    fn linkage_heights_on_line() {
        // 0, 1, 4: single 1 then 3; complete 1 then 4; average 1 then 3.5
        let e = Embedding::new(vec![[0., 0.], [1., 0.], [4., 0.]]).unwrap();
        let h = |l| {
            let d = build_dendrogram(&e, l).unwrap();
            (d.node(3).height, d.node(4).height)
        };
        assert_eq!(h(Linkage::Single), (1.0, 3.0));
        assert_eq!(h(Linkage::Complete), (1.0, 4.0));
        assert_eq!(h(Linkage::Average), (1.0, 3.5));
        let (w1, w2) = h(Linkage::Ward);
        assert!((w1 - 1.0).abs() < 1e-12);
        // sqrt(2 * 2 * 1 / 3 * 3.5^2)
        assert!((w2 - (4.0f64 / 3.0 * 12.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn annotate_toy() {
        let e = Embedding::new(toy_points()).unwrap();
        let rows: Vec<Vec<f64>> = toy_points().iter().map(|p| p.to_vec()).collect();
        let data = Dataset::numeric(vec!["a1".into(), "a2".into()], &rows).unwrap();
        let d = annotate_stats(build_dendrogram(&e, Linkage::Single).unwrap(), &data).unwrap();
        let expected = Stats::Numeric(NumericStats {
            count: 4,
            mean: vec![5.5, 1.5],
            variance: vec![1.25, 0.25],
        });
        assert!(d.stats(10).max_deviation(&expected).unwrap() < 1e-12);
        assert_eq!(d.stats(3).count(), 1);
        let all: Vec<usize> = (0..8).collect();
        assert!(
            d.root_stats()
                .max_deviation(&Stats::from_rows(&data, &all))
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn annotate_size_mismatch() {
        let e = Embedding::new(vec![[0., 0.], [1., 1.], [2., 2.]]).unwrap();
        let data = Dataset::numeric(vec!["a".into()], &[vec![1.0], vec![2.0]]).unwrap();
        let d = build_dendrogram(&e, Linkage::Ward).unwrap();
        assert!(matches!(annotate_stats(d, &data), Err(Error::Size(_))));
    }

    #[test]
    fn from_merges_validation() {
        let ok = [
            Merge {
                left: 0,
                right: 1,
                height: 1.0,
                count: 2,
            },
            Merge {
                left: 2,
                right: 3,
                height: 2.0,
                count: 3,
            },
        ];
        assert!(Dendrogram::from_merges(3, &ok).is_ok());
        let bad_count = [
            Merge {
                left: 0,
                right: 1,
                height: 1.0,
                count: 2,
            },
            Merge {
                left: 2,
                right: 3,
                height: 2.0,
                count: 4,
            },
        ];
        assert!(Dendrogram::from_merges(3, &bad_count).is_err());
        let reuse = [
            Merge {
                left: 0,
                right: 1,
                height: 1.0,
                count: 2,
            },
            Merge {
                left: 0,
                right: 3,
                height: 2.0,
                count: 3,
            },
        ];
        assert!(Dendrogram::from_merges(3, &reuse).is_err());
        let forward = [
            Merge {
                left: 0,
                right: 4,
                height: 1.0,
                count: 2,
            },
            Merge {
                left: 1,
                right: 2,
                height: 2.0,
                count: 3,
            },
        ];
        assert!(Dendrogram::from_merges(3, &forward).is_err());
    }

    #[test]
    fn fixture_csv_roundtrip() {
        let e = Embedding::new(toy_points()).unwrap();
        let d = build_dendrogram(&e, Linkage::Ward).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        assert_eq!(load_dendrogram(f.path()).unwrap(), d);
    }
}

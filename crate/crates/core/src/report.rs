//! Result serialization (`result.json`) and hand-written SVG plots.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Embedding, Kind};
use crate::hierarchy::Linkage;
use crate::search::{Generator, IterationRecord, PwX, SearchConfig};
use crate::stats::{complexity, regularizer, ScoreParams, Summary};

/// Fixed qualitative palette, cycled by cluster id.
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn round_summary(s: &Summary) -> Summary {
    match s {
        Summary::Gaussian { mean, variance } => Summary::Gaussian {
            mean: sig9(*mean),
            variance: sig9(*variance),
        },
        Summary::Categorical { frequencies } => Summary::Categorical {
            frequencies: frequencies.iter().map(|&f| sig9(f)).collect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub alpha: f64,
    pub beta: f64,
    pub min_att: usize,
    pub max_att: usize,
    pub time_budget: Option<f64>,
    pub max_iterations: Option<usize>,
    pub min_cluster_size: usize,
    pub generator: Generator,
    pub linkage: Linkage,
    pub k_min: usize,
    pub k_max: usize,
    pub seed: u64,
    pub dendrogram_fixture: bool,
}

impl ConfigEcho {
    pub fn new(config: &SearchConfig, linkage: Linkage, dendrogram_fixture: bool) -> Self {
        Self {
            alpha: sig9(config.score.alpha),
            beta: sig9(config.score.beta),
            min_att: config.min_att,
            max_att: config.max_att,
            time_budget: config.time_budget,
            max_iterations: config.max_iterations,
            min_cluster_size: config.min_cluster_size,
            generator: config.generator,
            linkage,
            k_min: config.k_min,
            k_max: config.k_max,
            seed: config.seed,
            dendrogram_fixture,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub m: usize,
    pub kind: Kind,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub index: usize,
    pub name: String,
    pub information: f64,
    pub parameter_count: usize,
    pub cluster: Summary,
    pub global: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub id: usize,
    pub size: usize,
    pub node: Option<usize>,
    pub is_remainder: bool,
    pub color_index: usize,
    pub members: Vec<usize>,
    pub attributes: Vec<AttributeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub initialization_seconds: f64,
    pub iteration_seconds: Vec<f64>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ConfigEcho,
    pub dataset: DatasetSummary,
    pub generator: Generator,
    pub iterations: Vec<IterationRecord>,
    pub selected_nodes: Vec<usize>,
    pub clusters: Vec<ClusterReport>,
    pub ratio: f64,
    pub total_information: f64,
    pub total_parameter_count: usize,
    pub timings: Timings,
}

impl RunResult {
    pub fn new(
        config: ConfigEcho,
        dataset: &Dataset,
        pwx: &PwX,
        log: &[IterationRecord],
        initialization_seconds: f64,
        total_seconds: f64,
    ) -> Self {
        let names = dataset.names();
        let clusters = pwx
            .partitioning
            .clusters
            .iter()
            .zip(&pwx.explanation)
            .map(|(c, expl)| ClusterReport {
                id: c.id,
                size: c.members.len(),
                node: c.node,
                is_remainder: pwx.partitioning.remainder == Some(c.id),
                color_index: c.id % PALETTE.len(),
                members: c.members.clone(),
                attributes: expl
                    .iter()
                    .map(|a| AttributeReport {
                        index: a.attribute,
                        name: names[a.attribute].clone(),
                        information: sig9(a.information),
                        parameter_count: a.parameter_count,
                        cluster: round_summary(&a.cluster_summary),
                        global: round_summary(&a.global_summary),
                    })
                    .collect(),
            })
            .collect();
        let iterations = log
            .iter()
            .map(|r| IterationRecord {
                best_ratio: sig9(r.best_ratio),
                elapsed_seconds: sig9(r.elapsed_seconds),
                evaluated: Vec::new(),
                ..r.clone()
            })
            .collect::<Vec<_>>();
        Self {
            generator: config.generator,
            config,
            dataset: DatasetSummary {
                n: dataset.n(),
                m: dataset.m(),
                kind: dataset.kind(),
                attributes: names.to_vec(),
            },
            timings: Timings {
                initialization_seconds: sig9(initialization_seconds),
                iteration_seconds: iterations.iter().map(|r| r.elapsed_seconds).collect(),
                total_seconds: sig9(total_seconds),
            },
            iterations,
            selected_nodes: pwx.partitioning.selected_nodes.clone(),
            clusters,
            ratio: sig9(pwx.ratio),
            total_information: sig9(pwx.total_information),
            total_parameter_count: pwx.total_param_count,
        }
    }

    /// Ratio recomputed from the serialized per-attribute parts.
    pub fn rescore(&self) -> f64 {
        let score = ScoreParams {
            alpha: self.config.alpha,
            beta: self.config.beta,
        };
        let attrs = self.clusters.iter().flat_map(|c| &c.attributes);
        let info: f64 = attrs.clone().map(|a| a.information).sum();
        let params: usize = attrs.map(|a| a.parameter_count).sum();
        if info == 0.0 {
            0.0
        } else {
            info / complexity(params, score)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable result") + "\n"
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Embedding scatter plot: one circle per point colored by cluster, and a
/// legend entry per cluster.
pub fn scatter_svg(embedding: &Embedding, result: &RunResult) -> String {
    let (width, height) = (800.0, 600.0);
    let (left, right, top, bottom) = (40.0, 180.0, 30.0, 40.0);
    let coords = embedding.coords();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for [x, y] in coords {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        ymin = ymin.min(*y);
        ymax = ymax.max(*y);
    }
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };
    let yspan = if ymax > ymin { ymax - ymin } else { 1.0 };
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let px = |x: f64| left + (x - xmin) / xspan * plot_w;
    let py = |y: f64| top + plot_h - (y - ymin) / yspan * plot_h;

    let mut color_of = vec![0usize; coords.len()];
    for c in &result.clusters {
        for &i in &c.members {
            color_of[i] = c.color_index;
        }
    }

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#cccccc"/>"##
    );
    let _ = writeln!(s, r#"<g class="points">"#);
    for (i, [x, y]) in coords.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            px(*x),
            py(*y),
            PALETTE[color_of[i]]
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (row, c) in result.clusters.iter().enumerate() {
        let y = top + 10.0 + row as f64 * 20.0;
        let label = if c.is_remainder {
            format!("cluster {} (rest, n={})", c.id, c.size)
        } else {
            format!("cluster {} (n={})", c.id, c.size)
        };
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text></g>"#,
            width - right + 15.0,
            y - 10.0,
            PALETTE[c.color_index],
            width - right + 32.0,
            y,
            escape(&label)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

const PANEL_W: f64 = 200.0;
const PANEL_H: f64 = 150.0;

/// Grid of explanation panels, one row per cluster and one panel per
/// explaining attribute.
pub fn explanations_svg(result: &RunResult, dataset: &Dataset) -> String {
    let cols = result
        .clusters
        .iter()
        .map(|c| c.attributes.len())
        .max()
        .unwrap_or(0)
        .max(1);
    let rows = result.clusters.len().max(1);
    let (w, h) = (cols as f64 * PANEL_W, rows as f64 * PANEL_H);
    let n = result.dataset.n as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    for (r, c) in result.clusters.iter().enumerate() {
        for (col, a) in c.attributes.iter().enumerate() {
            let ox = col as f64 * PANEL_W;
            let oy = r as f64 * PANEL_H;
            let _ = writeln!(s, r#"<g class="panel" transform="translate({ox},{oy})">"#);
            let _ = writeln!(
                s,
                r##"<rect x="2" y="2" width="196" height="146" fill="none" stroke="#dddddd"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="8" y="16" font-family="sans-serif" font-size="11">c{}: {} (I={:.3})</text>"#,
                c.id,
                escape(&a.name),
                a.information
            );
            let color = PALETTE[c.color_index];
            match (&a.cluster, &a.global) {
                (
                    Summary::Gaussian {
                        mean: cm,
                        variance: cv,
                    },
                    Summary::Gaussian {
                        mean: gm,
                        variance: gv,
                    },
                ) => {
                    gaussian_panel(&mut s, (*cm, *cv), (*gm, *gv), c.size as f64 / n, color);
                }
                (
                    Summary::Categorical { frequencies: cf },
                    Summary::Categorical { frequencies: gf },
                ) => {
                    let labels = dataset
                        .dictionaries()
                        .map(|d| d[a.index].clone())
                        .unwrap_or_default();
                    categorical_panel(&mut s, cf, gf, &labels, color);
                }
                _ => {}
            }
            let _ = writeln!(s, "</g>");
        }
    }
    s.push_str("</svg>\n");
    s
}

fn gaussian_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Global pdf as a solid curve, cluster pdf scaled by the cluster's share of
/// the points as a dashed curve.
fn gaussian_panel(
    s: &mut String,
    cluster: (f64, f64),
    global: (f64, f64),
    share: f64,
    color: &str,
) {
    let reg = regularizer(global.1);
    let (cm, cv) = (cluster.0, cluster.1 + reg);
    let (gm, gv) = (global.0, global.1 + reg);
    let lo = (gm - 3.5 * gv.sqrt()).min(cm - 3.5 * cv.sqrt());
    let hi = (gm + 3.5 * gv.sqrt()).max(cm + 3.5 * cv.sqrt());
    let span = if hi > lo { hi - lo } else { 1.0 };
    const SAMPLES: usize = 120;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|i| lo + span * i as f64 / SAMPLES as f64)
        .collect();
    let global_y: Vec<f64> = xs.iter().map(|&x| gaussian_pdf(x, gm, gv)).collect();
    let cluster_y: Vec<f64> = xs
        .iter()
        .map(|&x| share * gaussian_pdf(x, cm, cv))
        .collect();
    let ymax = global_y
        .iter()
        .chain(&cluster_y)
        .cloned()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let (x0, y0, pw, ph) = (10.0, 135.0, 180.0, 105.0);
    let path = |ys: &[f64]| {
        let mut d = String::new();
        for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if i == 0 { "M" } else { "L" },
                x0 + (x - lo) / span * pw,
                y0 - y / ymax * ph
            );
        }
        d.trim_end().to_string()
    };
    let _ = writeln!(
        s,
        r##"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="#999999"/>"##,
        x0 + pw
    );
    let _ = writeln!(
        s,
        r##"<path class="global" d="{}" fill="none" stroke="#444444" stroke-width="1.5"/>"##,
        path(&global_y)
    );
    let _ = writeln!(
        s,
        r#"<path class="cluster" d="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="4 3"/>"#,
        path(&cluster_y)
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="148" font-family="sans-serif" font-size="9">{lo:.3}</text><text x="190" y="148" text-anchor="end" font-family="sans-serif" font-size="9">{hi:.3}</text>"#
    );
}

/// Paired bars per category: global frequency in grey, cluster frequency in
/// the cluster color.
fn categorical_panel(
    s: &mut String,
    cluster: &[f64],
    global: &[f64],
    labels: &[String],
    color: &str,
) {
    let l = cluster.len().max(1);
    let (x0, y0, pw, ph) = (10.0, 130.0, 180.0, 100.0);
    let slot = pw / l as f64;
    let bar = slot * 0.4;
    for (i, (&cf, &gf)) in cluster.iter().zip(global).enumerate() {
        let x = x0 + i as f64 * slot;
        let _ = writeln!(
            s,
            r##"<rect class="global" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#bbbbbb"/>"##,
            x + slot * 0.1,
            y0 - gf * ph,
            bar,
            gf * ph
        );
        let _ = writeln!(
            s,
            r#"<rect class="cluster" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            x + slot * 0.5,
            y0 - cf * ph,
            bar,
            cf * ph
        );
        if let Some(name) = labels.get(i) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="143" text-anchor="middle" font-family="sans-serif" font-size="8">{}</text>"#,
                x + slot * 0.5,
                escape(name)
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_rounding() {
        assert_eq!(sig9(0.6680413688245624), 0.668041369);
        assert_eq!(sig9(0.0), 0.0);
        assert_eq!(sig9(123456789012.0), 123456789000.0);
        assert_eq!(sig9(-1.0e-12 / 3.0), -3.33333333e-13);
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}

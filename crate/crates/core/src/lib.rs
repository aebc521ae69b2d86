//! Partitionings of a 2-D embedding with per-cluster attribute explanations.
//!
//! The pipeline is: load a dataset and its embedding ([`dataset`]), build and
//! annotate a dendrogram over the embedding ([`hierarchy`]), then search for
//! the dendrogram-compatible partitioning whose explanations carry the most
//! information per unit of complexity ([`search`]). [`kmeans`] offers an
//! alternative candidate generator and [`report`] renders results.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod hierarchy;
pub mod kmeans;
pub mod report;
pub mod search;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("mixed data: numeric columns {numeric:?} and categorical columns {categorical:?} cannot be scored together")]
    MixedData {
        numeric: Vec<String>,
        categorical: Vec<String>,
    },

    #[error("size error: {0}")]
    Size(String),

    #[error("statistics kind mismatch: cannot combine numeric and categorical statistics")]
    KindMismatch,

    #[error("attribute arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },

    #[error("split would leave an empty complement")]
    EmptyComplement,

    #[error("split produced negative mass ({0})")]
    NegativeMass(String),

    #[error(
        "category support error: attribute has mass where the reference distribution has none"
    )]
    Support,

    #[error("empty cluster in partition")]
    EmptyCluster,

    #[error("cluster of size {size} is below the minimum cluster size {min}")]
    MinSize { size: usize, min: usize },

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("no valid candidate partitioning at the first iteration")]
    NoCandidate,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid dendrogram: {0}")]
    Dendrogram(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

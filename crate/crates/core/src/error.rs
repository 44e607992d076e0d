use std::path::PathBuf;

use crate::dataset::Label;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    BadCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("expected exactly two distinct labels, found {0:?}")]
    LabelCount(Vec<String>),

    #[error("positive label {wanted:?} not among observed labels {observed:?}")]
    UnknownPositiveLabel { wanted: String, observed: Vec<String> },

    #[error("dataset needs samples of both classes (positive: {positives}, negative: {negatives})")]
    SingleClass { positives: usize, negatives: usize },

    #[error("invalid dataset shape: {0}")]
    Shape(String),

    #[error("{class:?} class has {count} samples, fewer than the {k} folds requested")]
    ClassTooSmall { class: Label, count: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rows {first} and {second} are duplicate points")]
    DuplicatePoints { first: usize, second: usize },

    #[error("vertex {0} has no graph neighbours")]
    IsolatedVertex(usize),

    #[error("filtering removes all {total} samples of the {class:?} class")]
    EmptiedClass { class: Label, total: usize },

    #[error("no support edges: the graph has no edge joining opposite classes")]
    NoSupportEdges,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("margin undefined for sample {index}: {reason}")]
    MarginUndefined { index: usize, reason: &'static str },

    #[error("tuning failed: {0}")]
    Tuning(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::io;

use crate::projection::ProjectionKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed corpus JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate project id `{0}`")]
    DuplicateId(String),

    #[error("record {index}: missing required field `{field}`")]
    MissingField { index: usize, field: &'static str },

    #[error("record {index}: invalid field `{field}`: {message}")]
    InvalidField {
        index: usize,
        field: &'static str,
        message: String,
    },

    #[error("component `{id}` has conflicting names `{first}` and `{second}`")]
    ConflictingComponent {
        id: String,
        first: String,
        second: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("projection {0} is empty")]
    EmptyProjection(ProjectionKind),

    #[error("cut-off pruned the matrix to {rows} rows x {cols} columns")]
    OverPruned { rows: usize, cols: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("matrix file line {line}: {message}")]
    MatrixFormat { line: usize, message: String },

    #[error("cannot build a model from a matrix without observed ratings")]
    EmptyModel,

    #[error("unknown row `{row}` and column `{col}`")]
    UnknownEntity { row: String, col: String },

    #[error("profile shares no item with the model vocabulary")]
    InsufficientOverlap,

    #[error("model state: {0}")]
    ModelState(String),

    #[error("cannot split {interactions} interactions into {k} folds")]
    Split { k: usize, interactions: usize },

    #[error("metric domain: {0}")]
    MetricDomain(String),

    #[error("rating scale must satisfy r_max > r_min, got ({min}, {max})")]
    Scale { min: f64, max: f64 },

    #[error("model was trained on matrix {expected} but the supplied matrix hashes to {found}")]
    StaleModel { expected: String, found: String },

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("no grid configuration could be evaluated")]
    NoViableConfig,

    #[error(transparent)]
    Io(#[from] io::Error),
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the embedding pipeline and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("points {first} and {second} coincide")]
    DuplicatePoints { first: usize, second: usize },

    #[error("proximity graph is disconnected: {} components with sizes {sizes:?}", sizes.len())]
    Disconnected { sizes: Vec<usize> },

    #[error("tangent estimate at point {point} is rank deficient ({rank} of {dim} directions)")]
    RankDeficient {
        point: usize,
        rank: usize,
        dim: usize,
    },

    #[error("point {point} reaches only {found} graph neighbors, {needed} required")]
    NeighborhoodTooSmall {
        point: usize,
        found: usize,
        needed: usize,
    },

    #[error("vertices {from} and {to} are not adjacent")]
    NotAPath { from: usize, to: usize },

    #[error("edge {from}->{to} projects to zero length on the tangent frame")]
    ZeroProjection { from: usize, to: usize },

    #[error("vertex {target} is unreachable from {source_vertex}")]
    Unreachable { source_vertex: usize, target: usize },

    #[error("eigensolver failure: {0}")]
    EigFailure(String),

    #[error("degenerate spectrum: eigenvalue {index} is {value:e} against a top eigenvalue of {top:e}")]
    DegenerateSpectrum { index: usize, value: f64, top: f64 },

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

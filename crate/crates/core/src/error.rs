use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed image {}: {reason}", path.display())]
    MalformedImage { path: PathBuf, reason: String },

    #[error("image has a zero dimension ({width}x{height})")]
    ZeroDimension { width: u32, height: u32 },

    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },

    #[error("dimension mismatch: {expected:?} vs {found:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("raster buffer length {len} does not match {width}x{height}")]
    BufferSize { width: u32, height: u32, len: usize },

    #[error("mask is empty")]
    EmptyMask,

    #[error("histogram has fewer than two occupied levels")]
    DegenerateHistogram,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("points are collinear")]
    Collinear,

    #[error("degenerate segment: start and end coincide")]
    DegenerateSegment,

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("only {0} edges available, need at least 3")]
    InsufficientEdges(usize),

    #[error("assembled polygon is not simple")]
    NonSimplePolygon,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("invalid manifest {} at `{at}`: {message}", path.display())]
    Manifest {
        path: PathBuf,
        at: String,
        message: String,
    },

    #[error("json error in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised while loading, validating, or transforming datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("matrix has no {0}")]
    EmptyMatrix(&'static str),
    #[error("metadata keys do not cover matrix rows: {0}")]
    DimensionMismatch(String),
    #[error("non-numeric value {value:?} at row {row:?}, column {col:?}")]
    NonNumericCell {
        row: String,
        col: String,
        value: String,
    },
    #[error("duplicate identifier {0:?}")]
    DuplicateId(String),
    #[error("non-finite value at row {row:?}, column {col:?}")]
    NonFinite { row: String, col: String },
    #[error("every protein column exceeds the missing-value threshold")]
    AllColumnsDropped,
    #[error("sample {sample:?} has fewer than {k} usable neighbors for imputation")]
    InsufficientNeighbors { sample: String, k: usize },
    #[error("unknown clustering {0:?}")]
    UnknownClustering(String),
    #[error("unknown cell type {0:?} in clustering {1:?}")]
    UnknownCellType(String, String),
    #[error("unknown metadata field {0:?}")]
    UnknownField(String),
    #[error("survival field {field:?} invalid: {reason}")]
    BadSurvivalField { field: String, reason: String },
    #[error("malformed dataset manifest: {0}")]
    BadManifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Errors raised by statistical procedures.
#[derive(Debug, Error)]
pub enum StatError {
    #[error("k = {k} exceeds the number of rows ({rows})")]
    KTooLarge { k: usize, rows: usize },
    #[error("unknown clustering {0:?}")]
    UnknownClustering(String),
    #[error("unknown cluster label {0}")]
    UnknownCluster(usize),
    #[error("unknown metadata field {0:?}")]
    UnknownField(String),
    #[error("group {0:?} matched no samples")]
    EmptyGroup(String),
    #[error("contrast side {side:?} has {n} samples; at least 2 required")]
    TooFewSamples { side: String, n: usize },
    #[error("a focus cell-type list requires stratified mode")]
    FocusWithoutStratification,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0} vector has zero variance")]
    ZeroVariance(&'static str),
    #[error("need at least {min} observations, got {n}")]
    TooShort { n: usize, min: usize },
    #[error("no events observed")]
    NoEvents,
    #[error("expression vector is constant")]
    ConstantExpression,
    #[error("every candidate split was degenerate")]
    AllSplitsDegenerate,
    #[error("Newton iteration did not converge{}", if *.separation { " (monotone likelihood / separation)" } else { "" })]
    NonConvergence { separation: bool },
    #[error("need at least {min} samples, got {n}")]
    TooFewSamplesNmf { n: usize, min: usize },
    #[error("query set is empty")]
    EmptyQuery,
    #[error("query proteins outside the universe: {0:?}")]
    QueryOutsideUniverse(Vec<String>),
    #[error("gene set {0:?} covers the whole ranked list")]
    SetCoversWholeList(String),
    #[error("gene set {0:?} has no overlap with the ranked list")]
    EmptyIntersection(String),
    #[error("p-value {0} outside [0, 1]")]
    OutOfRange(f64),
}

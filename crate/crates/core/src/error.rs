use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty after filtering")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("label {0:?} is reserved")]
    ReservedLabel(String),
    #[error("document {doc:?} carries label {label:?} which is not in the layout")]
    UnknownLabel { doc: String, label: String },
    #[error("document {0:?} has no topics it is allowed to use")]
    EmptySupport(String),
    #[error("slice {0} has no documents")]
    EmptySlice(usize),
    #[error("slices do not partition the documents: {0}")]
    NotAPartition(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("agreement is undefined: every rating falls in a single category")]
    DegenerateAgreement,
    #[error("correlation is undefined: a rating vector has zero variance")]
    ZeroVariance,
    #[error("malformed annotation: {0}")]
    MalformedAnnotation(String),
    #[error("predictions and gold labels cover different documents: {0}")]
    DocumentSetMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports. `code()` gives the stable
/// machine-readable tag printed by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("dense dimension mismatch: expected {expected}, found {found} (doc {doc_id})")]
    DimensionMismatch { doc_id: u64, expected: usize, found: usize },
    #[error("duplicate document id {0}")]
    DuplicateId(u64),
    #[error("sparse indices not strictly ascending in {path} part of doc {doc_id}")]
    UnsortedSparse { doc_id: u64, path: &'static str },
    #[error("non-finite value in {path} part of doc {doc_id}")]
    NonFinite { doc_id: u64, path: &'static str },
    #[error("explicit zero entry at index {index} in {path} part of doc {doc_id}")]
    ZeroEntry { doc_id: u64, path: &'static str, index: u32 },
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("corpus of {n} documents too small for degree {d}")]
    CorpusTooSmall { n: usize, d: usize },
    #[error("degree {0} is not even")]
    DegreeNotEven(usize),
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("unknown document id {0}")]
    UnknownDocument(u64),
    #[error("missing truth for query {0}")]
    MissingTruth(usize),
    #[error("not an index file")]
    NotAnIndex,
    #[error("unsupported index format version {0}")]
    VersionMismatch(u32),
    #[error("checksum failure in section {0}")]
    ChecksumFailure(&'static str),
    #[error("truncated index file")]
    Truncated,
    #[error("malformed index: {0}")]
    Malformed(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyCorpus => "empty-corpus",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::DuplicateId(_) => "duplicate-id",
            Error::UnsortedSparse { .. } => "unsorted-sparse",
            Error::NonFinite { .. } => "non-finite",
            Error::ZeroEntry { .. } => "zero-entry",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::InvalidWeights(_) => "invalid-weights",
            Error::InvalidQuery(_) => "invalid-query",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::CorpusTooSmall { .. } => "corpus-too-small",
            Error::DegreeNotEven(_) => "degree-not-even",
            Error::UnknownNode(_) => "unknown-node",
            Error::UnknownDocument(_) => "unknown-id",
            Error::MissingTruth(_) => "missing-truth",
            Error::NotAnIndex => "not-an-index",
            Error::VersionMismatch(_) => "version-mismatch",
            Error::ChecksumFailure(_) => "checksum-failure",
            Error::Truncated => "truncated",
            Error::Malformed(_) => "malformed-index",
            Error::Invariant(_) => "invariant-violation",
            Error::Parse { .. } => "parse-error",
            Error::Io(_) => "io-error",
        }
    }
}

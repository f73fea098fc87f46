use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("entry {entry} ({token:?}): expected {expected} components, found {found}")]
    RowLength {
        entry: usize,
        token: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in vector of {0:?}")]
    NonFinite(String),

    #[error("duplicate token {0:?}")]
    DuplicateToken(String),

    #[error("zero-norm vector for {0:?}")]
    ZeroVector(String),

    #[error("invalid token {0:?}")]
    InvalidToken(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero-norm input vector")]
    ZeroNorm,

    #[error("at least 2 words are required, got {0}")]
    InsufficientVocabulary(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("word {0:?} is not in the similarity graph")]
    WordNotInGraph(String),

    #[error("duplicate sense {word}#{sense_id}")]
    DuplicateSense { word: String, sense_id: u32 },

    #[error("no member of {word}#{sense_id} is in the vocabulary")]
    NoMemberInVocabulary { word: String, sense_id: u32 },

    #[error("total weight of {word}#{sense_id} is not positive")]
    NonPositiveWeight { word: String, sense_id: u32 },

    #[error("unknown sense {0}")]
    UnknownSense(String),

    #[error("no senses for target {0:?}")]
    UnknownTarget(String),

    #[error("the probability strategy requires a context embedding matrix")]
    MissingContextMatrix,

    #[error("no context word is present in the vocabulary")]
    NoResolvableContext,

    #[error("labelings cover different instance sets")]
    LabelMismatch,

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("dataset integrity: {0}")]
    Integrity(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

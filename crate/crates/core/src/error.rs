use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty intersection undefined")]
    EmptyIntersection,

    #[error("enumeration limit: n = {n} exceeds {limit}")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("ground-set size mismatch: expected {expected}, found {found}")]
    GroundSizeMismatch { expected: usize, found: usize },

    #[error("ground-set size {0} outside 1..=128")]
    GroundSizeRange(usize),

    #[error("element {element} out of range [1, {n}]")]
    ElementOutOfRange { element: usize, n: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid family spec: {0}")]
    InvalidSpec(String),

    #[error("canonicalization limit: n = {0} exceeds 16")]
    CanonicalizationLimit(usize),

    #[error("empty family: global intersection undefined")]
    EmptyFamily,

    #[error("lemma hypothesis fails: {0}")]
    LemmaHypothesis(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown bound id `{0}`")]
    UnknownBound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("relation `{name}` has arity {expected}, used with {found} arguments")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("coordinate {coordinate} out of range for dimension {dimension}")]
    CoordinateOutOfRange { coordinate: usize, dimension: usize },

    #[error("formula uses {span} variables but the space has dimension {dimension}")]
    SpanExceedsDimension { span: usize, dimension: usize },

    #[error("tuple entry {entry} out of range for universe of size {universe_size}")]
    TupleOutOfRange { entry: usize, universe_size: usize },

    #[error("tuple of length {found} given for a relation of arity {arity}")]
    TupleLength { arity: usize, found: usize },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("theory axiom `{0}` does not hold in the structure")]
    TheoryNotSatisfied(String),

    #[error("the given sorts do not partition the universe: {0}")]
    SortsNotPartition(String),

    #[error("unsupported dimension {n}: {reason}")]
    UnsupportedDimension { n: usize, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the toolkit. Probabilistic failures (a sketch that lost
/// rank, a disconnected sparsifier) are reported through result flags where
/// the caller is expected to retry, and through this type otherwise.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("degenerate weight stream")]
    DegenerateWeightStream,
    #[error("invalid weight {value} at position {index}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("degenerate probabilities")]
    DegenerateProbabilities,
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("undefined stable rank (zero matrix)")]
    UndefinedStableRank,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero matrix: {0}")]
    ZeroMatrix(&'static str),
    #[error("sketch lost rank ({rank} < {expected}); increase the sketch size r1")]
    SketchLostRank { rank: usize, expected: usize },
    #[error("matrix columns are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotSpsd(String),
    #[error("graph has a self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("invalid edge ({u}, {v}): {reason}")]
    InvalidEdge { u: usize, v: usize, reason: String },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("incompatible right-hand side: {0}")]
    IncompatibleRhs(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

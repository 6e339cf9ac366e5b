use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite gradient entry at index {index}")]
    NonFiniteGradient { index: usize },
    #[error(
        "conjugate gradients did not converge within {iters} iterations (residual {residual:e})"
    )]
    CgDidNotConverge { iters: usize, residual: f64 },
    #[error("window [{start}, {start_plus_w}) out of bounds for series of length {n}")]
    WindowOutOfBounds {
        start: usize,
        start_plus_w: usize,
        n: usize,
    },
    #[error("sample with start {start} is not registered in the sample set")]
    SampleNotInSet { start: usize },
    #[error("series of length {n} is shorter than window length {w}")]
    SeriesTooShort { n: usize, w: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("labels are degenerate: need at least one positive and one negative point")]
    DegenerateLabels,
    #[error("anomaly pool too small for contamination ratio {ratio}")]
    PoolTooSmall { ratio: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

/// Errors raised by table construction, model building, fitting and testing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("cell coordinate {value} on axis {axis} outside 1..={r}")]
    CoordinateOutOfRange { axis: usize, value: usize, r: usize },

    #[error("axis {axis} outside 1..={t}")]
    AxisOutOfRange { axis: usize, t: usize },

    #[error("shape mismatch: expected {expected} cells, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid scores: {0}")]
    InvalidScores(String),

    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("conditional probability undefined: orbit of cell {cell:?} has zero total")]
    UndefinedConditional { cell: Vec<usize> },

    #[error("constraint undefined at cell {cell:?}: {reason}")]
    Domain { cell: Vec<usize>, reason: String },

    #[error(
        "logit undefined: cumulative marginal of axis {axis} at category {category} is {value}"
    )]
    LogitDomain {
        axis: usize,
        category: usize,
        value: f64,
    },

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("unknown model tag `{0}`")]
    UnknownModel(String),

    #[error("unknown f-divergence spec `{0}`")]
    UnknownFSpec(String),

    #[error(
        "infinite statistic: fitted count is zero at cell {cell:?} with observed count {observed}"
    )]
    InfiniteStatistic { cell: Vec<usize>, observed: u64 },

    #[error("singular covariance of constraints: deficient direction along constraint {direction} (condition {condition:.3e})")]
    Singular { direction: usize, condition: f64 },

    #[error("model nesting violated: conditional statistic {0} is negative")]
    NestingViolation(f64),

    #[error("fitted solution inconsistent with the model (residual {0:.3e})")]
    Inconsistent(f64),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

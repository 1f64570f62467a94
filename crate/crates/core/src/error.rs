use std::path::PathBuf;

/// Errors produced by the estimators, generators and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("insufficient samples: {found} points in the neighborhood, {needed} basis functions")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("rank deficient design matrix: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("zero basis scale with a point away from the origin")]
    ZeroScale,

    #[error("operator order {order} exceeds polynomial degree {max_degree}")]
    OperatorOrderTooHigh { order: usize, max_degree: usize },

    #[error("too few samples: {n} samples cannot feed {splits} splits")]
    TooFewSamples { n: usize, splits: usize },

    #[error("no estimate covers a strict majority within distance {diameter}")]
    NoMajorityBall { diameter: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid experiment spec: {0}")]
    SpecInvalid(String),

    #[error("rate fit needs at least 3 distinct n values, found {found}")]
    TooFewPoints { found: usize },

    #[error("no aggregate data to plot")]
    NoData,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable name, used by the CLI on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::ZeroScale => "ZeroScale",
            Error::OperatorOrderTooHigh { .. } => "OperatorOrderTooHigh",
            Error::TooFewSamples { .. } => "TooFewSamples",
            Error::NoMajorityBall { .. } => "NoMajorityBall",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::NoData => "NoData",
            Error::Parse(_) => "ParseError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

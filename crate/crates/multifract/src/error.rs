//! Shared error type.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {detail}")]
    MalformedHeader { path: String, detail: String },

    #[error("{path}: row {row}: {detail}")]
    BadRow {
        path: String,
        row: usize,
        detail: String,
    },

    #[error("missing file: {0}")]
    MissingFile(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("expected a {expected} series, got {got}")]
    KindMismatch { expected: &'static str, got: String },

    #[error("aggregation produced {got} bin(s); at least 2 required")]
    TooFewBins { got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scale {scale} exceeds series length {len}")]
    ScaleTooLarge { scale: usize, len: usize },

    #[error("too few points for {context}: need {needed}, got {got}")]
    TooFewPoints {
        needed: usize,
        got: usize,
        context: &'static str,
    },

    #[error("non-positive value in {0}")]
    NonPositive(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("expected {} fluctuation surface", if *expected_signed { "a signed (cross-covariance)" } else { "an unsigned (variance)" })]
    WrongSurfaceKind { expected_signed: bool },

    #[error("all segment variances vanish at scale {scale}")]
    DegenerateScale { scale: usize },

    #[error("fit diverged: {0}")]
    FitDiverged(String),

    #[error("no q with a uniform fluctuation sign over the fit range")]
    NoScalingDomain,

    #[error("misaligned series: {0}")]
    Misaligned(String),

    #[error("circulant embedding not positive semi-definite for H={hurst}")]
    EmbeddingFailed { hurst: f64 },

    #[error("pair {pair:?} failed at stage {stage}: {detail}")]
    PipelineFailed {
        pair: String,
        stage: String,
        detail: String,
    },
}

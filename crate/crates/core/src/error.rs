use thiserror::Error;

/// Errors produced by the box-ball library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BbsError {
    #[error("kappa must be at least 1")]
    ZeroKappa,

    #[error("symbol {symbol} at index {index} exceeds kappa = {kappa}")]
    InvalidSymbol {
        index: i64,
        symbol: u32,
        kappa: usize,
    },

    #[error("color {color} is not in 1..={kappa}")]
    InvalidColor { color: usize, kappa: usize },

    #[error(
        "windowed configuration must cover the anchor: window [{first}, {last}] does not reach 0"
    )]
    AnchorOutsideWindow { first: i64, last: i64 },

    #[error("malformed path at index {index}: {reason}")]
    MalformedPath { index: i64, reason: String },

    #[error("index {index} is outside the window [{first}, {last}]")]
    OutOfWindow { index: i64, first: i64, last: i64 },

    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("{op}: result depends on data outside the window")]
    Undecidable { op: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inadmissible law: {0}")]
    InadmissibleLaw(String),

    #[error("inadmissible drift: {0}")]
    InadmissibleDrift(String),

    #[error("step {step} of word failed: {source}")]
    WordStep {
        step: usize,
        #[source]
        source: Box<BbsError>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, BbsError>;

impl BbsError {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        BbsError::Domain {
            op,
            reason: reason.into(),
        }
    }
}

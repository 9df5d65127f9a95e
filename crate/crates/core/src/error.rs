use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bit sequence has odd length {0}")]
    OddBitCount(usize),
    #[error("symbol index {0} is outside 0..4")]
    InvalidSymbolIndex(usize),
    #[error("invalid link parameters: {0}")]
    InvalidLinkParams(String),
    #[error("RRC span of {span} symbols cannot hold the main lobe (need at least {min})")]
    RrcSpanTooShort { span: usize, min: usize },
    #[error("RRC roll-off {0} must lie in (0, 1)")]
    InvalidRolloff(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("tap count {0} must be odd")]
    EvenTapCount(usize),
    #[error("tap count {n_tap} exceeds sequence length {len}")]
    TapCountTooLarge { n_tap: usize, len: usize },
    #[error("least squares needs at least as many rows ({rows}) as columns ({cols})")]
    Underdetermined { rows: usize, cols: usize },
    #[error("class {0} is absent from the training data")]
    MissingClass(usize),
    #[error("decision boundaries are not strictly increasing: {0:?}")]
    UnorderedBoundaries([f64; 3]),
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid SNN parameters: {0}")]
    InvalidSnnParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("credibility interval needs at least one trial")]
    NoTrials,
    #[error("target BER {target:e} is not bracketed: {curve}")]
    NotBracketed { target: f64, curve: String },
    #[error("all seeds diverged")]
    AllSeedsDiverged,
    #[error("parse error in {context}: {detail}")]
    Parse { context: String, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, detail: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            detail: detail.to_string(),
        }
    }
}

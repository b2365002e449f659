use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dendrogram: {0}")]
    InvalidTree(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("index {index} out of range for {n} objects")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("leaf counts differ: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("similarity matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),

    #[error("embedding row {0} has zero norm")]
    ZeroNorm(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested {requested} comparisons but only {available} are available")]
    InsufficientComparisons { requested: u64, available: u64 },

    #[error("triplet set is not closed under (i,j,k) <-> (j,i,k): missing partner of ({0}, {1}, {2})")]
    NotPairClosed(usize, usize, usize),

    #[error("refusing to enumerate trees on {n} leaves (cap is {cap})")]
    EnumerationCap { n: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

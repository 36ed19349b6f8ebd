use std::fmt;
use std::io;
use std::path::PathBuf;

/// Errors raised by summary construction, insertion, and queries.
#[derive(Debug, Clone, PartialEq)]
pub enum SummaryError {
    /// The error parameter must lie in (0, 1/2].
    InvalidEpsilon(f64),
    /// A sampling rate num/den must satisfy 1 <= num <= den.
    InvalidRate { num: u64, den: u128 },
    /// A fixed-length plan needs 1 <= m <= n.
    InvalidPlan { m: u64, n: u64 },
    /// The row-size parameter m must be positive.
    InvalidRowSize(u64),
    /// Query issued before any data was summarized.
    Empty,
    /// Insert would push a fixed-length summary past its declared n.
    StreamOverflow { n: u64 },
    /// A quantile fraction must lie in (0, 1].
    InvalidPhi(f64),
    /// A rank query must lie in [1, count].
    RankOutOfRange { rho: u64, count: u64 },
    /// The row designated to answer queries has not accepted any sample yet.
    EmptyActiveRow { row: u32 },
}

impl fmt::Display for SummaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SummaryError::InvalidEpsilon(e) => {
                write!(f, "epsilon {} outside (0, 0.5]", e)
            }
            SummaryError::InvalidRate { num, den } => {
                write!(f, "sampling rate {}/{} outside (0, 1]", num, den)
            }
            SummaryError::InvalidPlan { m, n } => {
                write!(f, "invalid plan: m = {}, n = {} (need 1 <= m <= n)", m, n)
            }
            SummaryError::InvalidRowSize(m) => write!(f, "row size m = {} must be positive", m),
            SummaryError::Empty => write!(f, "query on an empty summary"),
            SummaryError::StreamOverflow { n } => {
                write!(f, "insert past the declared stream length n = {}", n)
            }
            SummaryError::InvalidPhi(phi) => write!(f, "phi {} outside (0, 1]", phi),
            SummaryError::RankOutOfRange { rho, count } => {
                write!(f, "rank {} outside [1, {}]", rho, count)
            }
            SummaryError::EmptyActiveRow { row } => {
                write!(f, "active row {} has no samples yet", row)
            }
        }
    }
}

impl std::error::Error for SummaryError {}

/// Errors raised while generating or reading input streams.
#[derive(Debug)]
pub enum StreamError {
    Io {
        path: PathBuf,
        source: io::Error,
    },
    Parse {
        path: PathBuf,
        line: usize,
        content: String,
    },
    InvalidSpec(String),
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::Io { path, source } => {
                write!(f, "cannot read stream file {}: {}", path.display(), source)
            }
            StreamError::Parse {
                path,
                line,
                content,
            } => write!(
                f,
                "{}:{}: not a decimal integer: {:?}",
                path.display(),
                line,
                content
            ),
            StreamError::InvalidSpec(msg) => write!(f, "invalid stream spec: {}", msg),
        }
    }
}

impl std::error::Error for StreamError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            StreamError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Top-level error for the evaluation and reporting layers.
#[derive(Debug)]
pub enum QsError {
    Summary(SummaryError),
    Stream(StreamError),
    Config(String),
    Io(io::Error),
}

impl fmt::Display for QsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QsError::Summary(e) => write!(f, "{}", e),
            QsError::Stream(e) => write!(f, "{}", e),
            QsError::Config(msg) => write!(f, "{}", msg),
            QsError::Io(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for QsError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            QsError::Summary(e) => Some(e),
            QsError::Stream(e) => Some(e),
            QsError::Config(_) => None,
            QsError::Io(e) => Some(e),
        }
    }
}

impl From<SummaryError> for QsError {
    fn from(e: SummaryError) -> Self {
        QsError::Summary(e)
    }
}

impl From<StreamError> for QsError {
    fn from(e: StreamError) -> Self {
        QsError::Stream(e)
    }
}

impl From<io::Error> for QsError {
    fn from(e: io::Error) -> Self {
        QsError::Io(e)
    }
}

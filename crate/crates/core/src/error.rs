use std::path::PathBuf;

/// Errors raised anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: left is {left:?}, right is {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("fractional power of negative entry {value} at index {index}")]
    NegativeBase { index: usize, value: f64 },

    #[error("division by {value:e} at index {index} (below floor)")]
    DivisionUnderflow { index: usize, value: f64 },

    #[error("size cap exceeded: {requested} elements requested, cap is {cap}")]
    SizeCap { requested: usize, cap: usize },

    #[error("rank collapse: column {column} has norm {norm:e}")]
    RankCollapse { column: usize, norm: f64 },

    #[error("non-positive core scalar S = {value:e}")]
    NonPositiveS { value: f64 },

    #[error("zero Kronecker factor (norm {norm:e})")]
    ZeroFactor { norm: f64 },

    #[error("gradient is zero")]
    ZeroGradient,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: file contains no samples")]
    EmptyFile(PathBuf),

    #[error("dataset unavailable: {0}")]
    DatasetUnavailable(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Serialization { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

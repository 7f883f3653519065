use thiserror::Error;

/// Errors surfaced by the library. The CLI maps every variant to exit code 2
/// except [`Error::Config`], which is a usage error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty repository")]
    EmptyRepository,

    #[error("node {node} out of range (graph has {n} nodes)")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("commit log line {line}: {message}")]
    CommitLog { line: usize, message: String },

    #[error("negative line count at line {line}")]
    NegativeLineCount { line: usize },

    #[error("IV undefined for one class")]
    SingleClassIv,

    #[error("AUC undefined: labels contain a single class")]
    AucUndefined,

    #[error("{0}")]
    SingleClass(String),

    #[error("SMOTE needs ≥ 2 minority samples (got {0})")]
    SmoteTooFew(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("leakage guard: {0}")]
    Leakage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("one-class SVM did not converge after {iterations} iterations (KKT residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("intercept bisection failed after {iterations} iterations (achieved positive rate {achieved:.4})")]
    Bisection { iterations: usize, achieved: f64 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

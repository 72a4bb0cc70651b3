use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    /// A bound column is missing from the header.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("unknown cause label `{0}`")]
    UnknownCause(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("complete separation suspected: coefficient norm {norm:.3e} exceeds bound {bound:.1e} after {iterations} iterations")]
    Separation {
        norm: f64,
        bound: f64,
        iterations: usize,
    },

    #[error("alignment error: {} prediction record id(s) not in the dataset: {}", ids.len(), preview(ids))]
    Alignment { ids: Vec<String> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{} unclassified prediction(s) with policy keep-as-error: {}", ids.len(), preview(ids))]
    Unclassified { ids: Vec<String> },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::UnknownCause(_) => "mapping",
            Error::Split(_) => "split",
            Error::Parameter(_) => "parameter",
            Error::Shape(_) => "shape",
            Error::Numeric(_) => "numeric",
            Error::Separation { .. } => "separation",
            Error::Alignment { .. } => "alignment",
            Error::Parse(_) => "parse",
            Error::Unclassified { .. } => "unclassified",
            Error::Degenerate(_) => "degenerate",
            Error::Precondition(_) => "precondition",
        }
    }
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("environment is terminal; call reset before stepping")]
    StepAfterTerminal,

    #[error("environment `{0}` has no enumerable transition model")]
    NotEnumerable(String),

    #[error("decision rate undefined over zero ticks")]
    ZeroTicks,

    #[error("normalization denominator is zero (baseline score equals random score {0})")]
    DegenerateNormalization(f64),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Config(_) => "config",
            Error::StepAfterTerminal => "step_after_terminal",
            Error::NotEnumerable(_) => "not_enumerable",
            Error::ZeroTicks => "zero_ticks",
            Error::DegenerateNormalization(_) => "degenerate_normalization",
            Error::MissingArtifact(_) => "missing_artifact",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::TomlDe(_) => "toml",
        }
    }
}

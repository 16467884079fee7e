use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate orbit: position and velocity are parallel or zero")]
    DegenerateOrbit,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("underdetermined attitude problem: {0}")]
    Underdetermined(String),

    #[error("missing column `{0}` in catalog header")]
    MissingColumn(String),

    #[error("catalog has no valid rows ({rejected} rejected)")]
    NoValidRows { rejected: usize },

    #[error("catalog is empty")]
    EmptyCatalog,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no converged steps in window [{start}, {end}] s")]
    EmptyWindow { start: f64, end: f64 },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data (files, configs, catalogs)
    /// rather than by a failure during computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::NoValidRows { .. }
                | Error::EmptyCatalog
                | Error::Config(_)
                | Error::Manifest(_)
                | Error::File { .. }
                | Error::Io(_)
                | Error::Csv(_)
                | Error::InvalidParameter(_)
        )
    }
}

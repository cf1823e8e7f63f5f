use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Raster dimensions the operation cannot handle (odd sides, mismatched buffers).
    #[error("unsupported geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A complex that violates face closure or filtration ordering.
    #[error("malformed complex: {0}")]
    Structure(String),

    #[error("oracle refuses complex with {size} simplices (limit {limit})")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("npy format error: {0}")]
    Npy(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("cannot decode image {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

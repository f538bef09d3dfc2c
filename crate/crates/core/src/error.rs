use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("variable '{variable}': expected {expected} bytes in {path}, found {actual}")]
    SizeMismatch {
        variable: String,
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("variable '{variable}': non-finite value at voxel {voxel}")]
    NonFinite { variable: String, voxel: usize },

    #[error("voxel index {index} out of range for {len} voxels")]
    VoxelOutOfRange { index: usize, len: usize },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("instance too large for brute-force enumeration: {0}")]
    TooLarge(String),

    #[error("out of memory while expanding variable set {variables:?}")]
    OutOfMemory { variables: Vec<u16> },

    #[error("malformed catalog: {0}")]
    Catalog(String),

    #[error("provenance mismatch: catalog was mined from {catalog}, manifest hashes to {manifest}")]
    ProvenanceMismatch { catalog: String, manifest: String },

    #[error("unknown {kind} {id}")]
    NotFound { kind: &'static str, id: String },

    #[error("cannot split group {0}: it has a single member")]
    SingletonSplit(usize),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn not_found(kind: &'static str, id: impl ToString) -> Self {
        Error::NotFound {
            kind,
            id: id.to_string(),
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, IoError>;

/// Failures of the file-format and command layer.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Storage {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Bytes do not follow the MVLS layout.
    #[error("format error: {0}")]
    Format(String),

    /// Well-formed data that breaks a documented invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("manifest {}: {kind}", path.display())]
    Manifest { path: PathBuf, kind: ManifestError },

    #[error("{}: malformed JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// Bad command-line input discovered after argument parsing.
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] logicspace_core::Error),
}

/// Distinct ways a dataset manifest can be rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifestError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("instance {instance_id:?} uses unknown view {view:?} (expected \"nl\" or \"sym\")")]
    UnknownView { instance_id: String, view: String },
    #[error("instance {instance_id:?} references missing file {}", path.display())]
    MissingFile { instance_id: String, path: PathBuf },
    #[error("instance {instance_id:?} has negative layer {layer}")]
    NegativeLayer { instance_id: String, layer: i64 },
    #[error("duplicate instance id {0:?}")]
    DuplicateInstance(String),
    #[error("instance {instance_id:?} has no {view} view at layer {layer}")]
    MissingView {
        instance_id: String,
        view: String,
        layer: usize,
    },
}

impl IoError {
    pub(crate) fn storage(path: impl Into<PathBuf>, source: io::Error) -> Self {
        IoError::Storage {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Usage(_) => 2,
            _ => 1,
        }
    }
}

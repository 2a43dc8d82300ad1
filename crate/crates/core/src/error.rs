// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error type shared by every core operation.

use alloc::boxed::Box;
use alloc::string::String;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is out of its allowed range or has the wrong shape.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data violates a documented invariant.
    #[error("validation failed: {0}")]
    Validation(String),

    /// An index points past the end of the indexed sequence.
    #[error("index {index} out of bounds for length {len}")]
    Bounds { index: usize, len: usize },

    /// Data carries no usable signal (zero variance, zero vector, zero basis).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Covariance is too close to singular to whiten.
    #[error("ill-conditioned covariance: {0}")]
    Conditioning(String),

    /// Two configuration objects disagree (e.g. steering layer vs artifact layer).
    #[error("configuration mismatch: {0}")]
    Configuration(String),

    /// Error raised inside a named pipeline stage.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Error raised while processing a specific layer.
    #[error("layer {layer}: {source}")]
    Layer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any stage/layer annotations and returns the innermost error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::Layer { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait ResultExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
    fn at_layer(self, layer: usize) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }

    fn at_layer(self, layer: usize) -> Result<T> {
        self.map_err(|e| Error::Layer {
            layer,
            source: Box::new(e),
        })
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Estimation of a shared NL/symbolic subspace of a transformer's residual
//! stream, steering of residual vectors along it, and the diagnostics built
//! on top (projection energy, alignment curves, ROC-AUC, style statistics).
//!
//! The crate is `no_std` and needs only `alloc`; file formats, manifests
//! and the command-line driver live in the `logicspace` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod pooling;
pub mod rng;
pub mod steering;
pub mod subspace;
pub mod synth;

pub use basis::OrthonormalBasis;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use pooling::{mean_pool, SpanRecord, View, ViewMatrixPair};
pub use steering::{
    candidate_layers, random_orthonormal_basis, select_hyperparams, steer_stream, steer_vector,
    EvalRecord, MaskPolicy, SteerConfig, TokenEvent,
};
pub use subspace::{
    apply_projector, back_project, cca_fit, center_columns, fit_subspace,
    mean_canonical_correlation, orthonormalize, pca_fit, CcaModel, FitConfig, PcaModel,
    SubspaceArtifact,
};

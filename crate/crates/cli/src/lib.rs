// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats, dataset manifests and the `logicspace` command-line driver
//! around [`logicspace_core`].
//!
//! Activations are exchanged as MVLS matrices (see [`matstore`]), spans as
//! JSON lines and datasets as JSON manifests; everything downstream of
//! pooling is computed by the core crate.

pub mod artifact;
pub mod commands;
pub mod dataset;
pub mod error;
pub mod events;
pub mod lexicon;
pub mod manifest;
pub mod matstore;
pub mod report;
pub mod spans;
pub mod synth_io;

pub use error::{IoError, Result};

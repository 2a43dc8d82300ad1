// SPDX-License-Identifier: MIT OR Apache-2.0

//! Layer-wise NL/symbolic alignment curves.

use alloc::collections::BTreeMap;

use crate::error::{Error, Result, ResultExt};
use crate::pooling::ViewMatrixPair;
use crate::subspace::{fit_subspace, FitConfig, SubspaceArtifact};

/// Fits one subspace per layer.
pub fn fit_layers(
    pairs: &BTreeMap<usize, ViewMatrixPair>,
    config: &FitConfig,
) -> Result<BTreeMap<usize, SubspaceArtifact>> {
    if pairs.is_empty() {
        return Err(Error::Parameter("no layers to fit".into()));
    }
    pairs
        .iter()
        .map(|(&layer, pair)| Ok((layer, fit_subspace(pair, layer, config).at_layer(layer)?)))
        .collect()
}

/// Mean canonical correlation `ρ̄` per layer.
pub fn layerwise_alignment(
    pairs: &BTreeMap<usize, ViewMatrixPair>,
    config: &FitConfig,
) -> Result<BTreeMap<usize, f64>> {
    Ok(fit_layers(pairs, config)?
        .into_iter()
        .map(|(l, a)| (l, a.mean_canonical_correlation()))
        .collect())
}

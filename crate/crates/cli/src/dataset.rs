// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pools manifest-referenced activations into per-layer view pairs.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use logicspace_core::{mean_pool, SpanRecord, View, ViewMatrixPair};
use rayon::prelude::*;

use crate::error::{IoError, Result};
use crate::manifest::DatasetManifest;
use crate::matstore::read_matrix;
use crate::spans::{find_span, read_spans};

fn load_span_files(
    manifest: &DatasetManifest,
    layer: usize,
) -> Result<BTreeMap<PathBuf, Arc<Vec<SpanRecord>>>> {
    let mut paths = Vec::new();
    for inst in &manifest.instances {
        for view in [View::Nl, View::Sym] {
            paths.push(manifest.view_files(inst, view, layer)?.spans);
        }
    }
    paths.sort();
    paths.dedup();
    paths
        .into_par_iter()
        .map(|p| Ok((p.clone(), Arc::new(read_spans(&p)?))))
        .collect()
}

fn pooled(
    manifest: &DatasetManifest,
    spans: &BTreeMap<PathBuf, Arc<Vec<SpanRecord>>>,
    idx: usize,
    view: View,
    layer: usize,
) -> Result<Vec<f64>> {
    let inst = &manifest.instances[idx];
    let files = manifest.view_files(inst, view, layer)?;
    let record = find_span(&spans[&files.spans], &inst.instance_id, view)?;
    let acts = read_matrix(&files.activations)?;
    mean_pool(&acts, record).map_err(|e| {
        IoError::Validation(format!(
            "instance {:?} ({view} view, layer {layer}): {e}",
            inst.instance_id
        ))
    })
}

/// Stacks mean-pooled NL and symbolic vectors in manifest order.
///
/// Instances are pooled in parallel; each instance's mean is summed in
/// token order, so the result does not depend on scheduling.
pub fn build_view_pair(manifest: &DatasetManifest, layer: usize) -> Result<ViewMatrixPair> {
    let spans = load_span_files(manifest, layer)?;
    let rows: Vec<(String, Vec<f64>, Vec<f64>)> = (0..manifest.instances.len())
        .into_par_iter()
        .map(|i| {
            let x = pooled(manifest, &spans, i, View::Nl, layer)?;
            let y = pooled(manifest, &spans, i, View::Sym, layer)?;
            Ok((manifest.instances[i].instance_id.clone(), x, y))
        })
        .collect::<Result<_>>()?;
    if let Some(first) = rows.first() {
        let d = first.1.len();
        for (id, x, y) in &rows {
            if x.len() != d || y.len() != d {
                return Err(IoError::Validation(format!(
                    "instance {id:?} has dimension {} (nl) / {} (sym), expected {d}",
                    x.len(),
                    y.len()
                )));
            }
        }
    }
    Ok(ViewMatrixPair::stack(rows)?)
}

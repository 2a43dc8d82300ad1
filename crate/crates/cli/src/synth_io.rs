// SPDX-License-Identifier: MIT OR Apache-2.0

//! Writes planted datasets in exactly the layout an activation extractor
//! produces: per-token MVLS activations, JSON-lines spans and one manifest
//! per layer.
//!
//! Each instance/view/layer gets `context` random tokens, then `proof`
//! tokens whose mean is the planted row, then one trailing question token.
//! Only the proof tokens are covered by the span, so pooling recovers the
//! planted matrices up to rounding.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use logicspace_core::rng::{GaussianSource, RNG_ALGORITHM};
use logicspace_core::synth::{generate_planted, generate_planted_layers, PlantedSpec};
use logicspace_core::{Matrix, SpanRecord, View, ViewMatrixPair};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{IoError, Result};
use crate::manifest::{write_manifest, DatasetManifest, InstanceEntry, ViewEntries, ViewEntry};
use crate::matstore::{write_matrix, Dtype};
use crate::spans::write_spans;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenLayout {
    pub context: usize,
    pub proof: usize,
}

impl Default for TokenLayout {
    fn default() -> Self {
        Self {
            context: 3,
            proof: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    /// Manifest path per layer.
    pub manifests: BTreeMap<usize, PathBuf>,
    pub true_basis: PathBuf,
    pub warnings: Vec<String>,
}

pub fn instance_id(i: usize) -> String {
    format!("inst{i:05}")
}

fn token_seed(seed: u64, instance: usize, view: View, layer: usize) -> u64 {
    let v = match view {
        View::Nl => 1u64,
        View::Sym => 2,
    };
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((instance as u64) << 20) ^ ((layer as u64) << 4) ^ v
}

/// Token matrix whose proof-token mean equals `row`.
fn token_matrix(row: &[f64], layout: TokenLayout, seed: u64) -> Result<Matrix> {
    let d = row.len();
    let mut rng = GaussianSource::new(seed);
    let mut rows = Vec::with_capacity(layout.context + layout.proof + 1);
    for _ in 0..layout.context {
        rows.push(rng.normal_vec(d));
    }
    let offsets: Vec<Vec<f64>> = (0..layout.proof).map(|_| rng.normal_vec(d)).collect();
    let mean: Vec<f64> = (0..d)
        .map(|j| offsets.iter().map(|o| o[j]).sum::<f64>() / layout.proof as f64)
        .collect();
    for o in &offsets {
        rows.push(
            row.iter()
                .zip(o)
                .zip(&mean)
                .map(|((r, x), m)| r + x - m)
                .collect(),
        );
    }
    rows.push(rng.normal_vec(d));
    Ok(Matrix::from_rows(&rows)?)
}

fn write_layer(
    dir: &Path,
    layer: usize,
    pair: &ViewMatrixPair,
    spec: &PlantedSpec,
    layout: TokenLayout,
    dtype: Dtype,
) -> Result<PathBuf> {
    let n = pair.len();
    let ranges = vec![(layout.context, layout.context + layout.proof)];
    let act_dir = dir.join("activations");
    fs::create_dir_all(&act_dir).map_err(|e| IoError::storage(&act_dir, e))?;

    let mut views: Vec<BTreeMap<String, ViewEntries>> = vec![BTreeMap::new(); n];
    for (view, m) in [(View::Nl, pair.x()), (View::Sym, pair.y())] {
        let spans_name = format!("spans_{view}_L{layer}.jsonl");
        let records: Vec<SpanRecord> = (0..n)
            .map(|i| SpanRecord::new(instance_id(i), view, ranges.clone()))
            .collect::<std::result::Result<_, _>>()?;
        write_spans(dir.join(&spans_name), &records)?;
        let names: Vec<String> = (0..n)
            .into_par_iter()
            .map(|i| {
                let name = format!("activations/{}_{view}_L{layer}.mvls", instance_id(i));
                let tokens = token_matrix(m.row(i), layout, token_seed(spec.seed, i, view, layer))?;
                write_matrix(dir.join(&name), &tokens, dtype)?;
                Ok(name)
            })
            .collect::<Result<_>>()?;
        for (i, name) in names.into_iter().enumerate() {
            views[i].insert(
                view.as_str().to_string(),
                ViewEntries::One(ViewEntry {
                    activations_path: name,
                    spans_path: spans_name.clone(),
                    layer: layer as i64,
                }),
            );
        }
    }
    let instances = views
        .into_iter()
        .enumerate()
        .map(|(i, views)| InstanceEntry {
            instance_id: instance_id(i),
            label: "planted".to_string(),
            views,
        })
        .collect();
    let mut manifest = DatasetManifest::new(instances);
    manifest.metadata = Some(serde_json::json!({
        "producer": "logicspace synth",
        "layer": layer,
        "pooling": "mean over proof-token spans",
    }));
    let path = dir.join(format!("manifest_L{layer}.json"));
    write_manifest(&path, &manifest)?;
    Ok(path)
}

#[derive(Serialize)]
struct SynthMeta<'a> {
    n: usize,
    dim: usize,
    k_true: usize,
    noise_sigma: f64,
    seed: u64,
    per_layer_noise: &'a Option<Vec<f64>>,
    context_tokens: usize,
    proof_tokens: usize,
    rng: &'a str,
    warnings: &'a [String],
}

/// Generates a planted dataset under `dir`. With `per_layer_noise` set,
/// one manifest is written per layer; otherwise a single layer 0.
pub fn write_planted_dataset(
    dir: impl AsRef<Path>,
    spec: &PlantedSpec,
    layout: TokenLayout,
    dtype: Dtype,
) -> Result<SynthOutput> {
    let dir = dir.as_ref();
    if layout.proof == 0 {
        return Err(IoError::Usage(
            "need at least one proof token per instance".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| IoError::storage(dir, e))?;
    let planted = generate_planted(spec)?;
    let layers = match spec.per_layer_noise {
        Some(_) => generate_planted_layers(spec)?,
        None => BTreeMap::from([(0, planted.pair.clone())]),
    };
    let mut manifests = BTreeMap::new();
    for (layer, pair) in &layers {
        manifests.insert(*layer, write_layer(dir, *layer, pair, spec, layout, dtype)?);
    }
    let true_basis = dir.join("true_basis_nl.mvls");
    write_matrix(&true_basis, planted.true_basis_nl.matrix(), Dtype::F64)?;
    let warnings = spec.warnings();
    let meta = SynthMeta {
        n: spec.n,
        dim: spec.dim,
        k_true: spec.k_true,
        noise_sigma: spec.noise_sigma,
        seed: spec.seed,
        per_layer_noise: &spec.per_layer_noise,
        context_tokens: layout.context,
        proof_tokens: layout.proof,
        rng: RNG_ALGORITHM,
        warnings: &warnings,
    };
    crate::report::write_json(dir.join("synth.json"), &meta)?;
    Ok(SynthOutput {
        manifests,
        true_basis,
        warnings,
    })
}

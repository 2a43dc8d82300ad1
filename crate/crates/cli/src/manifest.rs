// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dataset manifests tying activation and span files to instances, views
//! and layers.
//!
//! ```json
//! {"instances": [
//!   {"instance_id": "q1", "label": "True",
//!    "views": {"nl":  {"activations_path": "a/q1_nl.mvls",  "spans_path": "spans_nl.jsonl",  "layer": 12},
//!              "sym": {"activations_path": "a/q1_sym.mvls", "spans_path": "spans_sym.jsonl", "layer": 12}}}
//! ]}
//! ```
//!
//! A view may also map to a list of such entries, one per layer. Relative
//! paths are resolved against the manifest's directory.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use logicspace_core::View;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, ManifestError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub activations_path: String,
    pub spans_path: String,
    pub layer: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ViewEntries {
    One(ViewEntry),
    Many(Vec<ViewEntry>),
}

impl ViewEntries {
    pub fn entries(&self) -> &[ViewEntry] {
        match self {
            ViewEntries::One(e) => std::slice::from_ref(e),
            ViewEntries::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub instance_id: String,
    #[serde(default)]
    pub label: String,
    pub views: BTreeMap<String, ViewEntries>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub instances: Vec<InstanceEntry>,
    /// Free-form producer metadata; carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub root: PathBuf,
}

/// Resolved file locations of one view of one instance at one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewFiles {
    pub activations: PathBuf,
    pub spans: PathBuf,
}

impl DatasetManifest {
    pub fn new(instances: Vec<InstanceEntry>) -> Self {
        Self {
            instances,
            metadata: None,
            root: PathBuf::new(),
        }
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Every layer referenced by any view, ascending.
    pub fn layers(&self) -> BTreeSet<usize> {
        self.instances
            .iter()
            .flat_map(|i| i.views.values())
            .flat_map(|v| v.entries().iter().map(|e| e.layer as usize))
            .collect()
    }

    pub fn view_files(
        &self,
        instance: &InstanceEntry,
        view: View,
        layer: usize,
    ) -> Result<ViewFiles> {
        let missing = || IoError::Manifest {
            path: self.root.clone(),
            kind: ManifestError::MissingView {
                instance_id: instance.instance_id.clone(),
                view: view.as_str().to_string(),
                layer,
            },
        };
        let entry = instance
            .views
            .get(view.as_str())
            .and_then(|v| v.entries().iter().find(|e| e.layer == layer as i64))
            .ok_or_else(missing)?;
        Ok(ViewFiles {
            activations: self.resolve(&entry.activations_path),
            spans: self.resolve(&entry.spans_path),
        })
    }

    /// Checks view names, layers, id uniqueness and file existence.
    pub fn validate(&self, path: &Path) -> Result<()> {
        let fail = |kind| IoError::Manifest {
            path: path.to_path_buf(),
            kind,
        };
        let mut seen = HashSet::new();
        for inst in &self.instances {
            if !seen.insert(inst.instance_id.as_str()) {
                return Err(fail(ManifestError::DuplicateInstance(
                    inst.instance_id.clone(),
                )));
            }
            for (name, entries) in &inst.views {
                if name.parse::<View>().is_err() {
                    return Err(fail(ManifestError::UnknownView {
                        instance_id: inst.instance_id.clone(),
                        view: name.clone(),
                    }));
                }
                for e in entries.entries() {
                    if e.layer < 0 {
                        return Err(fail(ManifestError::NegativeLayer {
                            instance_id: inst.instance_id.clone(),
                            layer: e.layer,
                        }));
                    }
                    for p in [&e.activations_path, &e.spans_path] {
                        let full = self.resolve(p);
                        if !full.is_file() {
                            return Err(fail(ManifestError::MissingFile {
                                instance_id: inst.instance_id.clone(),
                                path: full,
                            }));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reads and eagerly validates a manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::storage(path, e))?;
    let mut manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| IoError::Manifest {
            path: path.to_path_buf(),
            kind: ManifestError::Malformed(e.to_string()),
        })?;
    manifest.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    manifest.validate(path)?;
    Ok(manifest)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &DatasetManifest) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::storage(path, e))
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk layout of a fitted subspace:
//!
//! ```text
//! DIR/U.mvls                  D × k' orthonormal basis
//! DIR/correlations.mvls       1 × k canonical correlations
//! DIR/pca_{nl,sym}_loadings.mvls, _means.mvls, _ratios.mvls
//! DIR/artifact.json           layer, config, k_requested, k_effective, dropped
//! ```

use std::fs;
use std::path::Path;

use logicspace_core::basis::ORTHONORMAL_TOL;
use logicspace_core::{FitConfig, OrthonormalBasis, PcaModel, SubspaceArtifact};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};
use crate::matstore::{read_matrix, read_vector, write_matrix, write_vector, Dtype};

pub const SIDECAR: &str = "artifact.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfigJson {
    pub variance_threshold: f64,
    pub k: usize,
    pub ridge: f64,
    pub rank_tol: f64,
}

impl From<&FitConfig> for FitConfigJson {
    fn from(c: &FitConfig) -> Self {
        Self {
            variance_threshold: c.variance_threshold,
            k: c.k,
            ridge: c.ridge,
            rank_tol: c.rank_tol,
        }
    }
}

impl From<FitConfigJson> for FitConfig {
    fn from(c: FitConfigJson) -> Self {
        FitConfig {
            variance_threshold: c.variance_threshold,
            k: c.k,
            ridge: c.ridge,
            rank_tol: c.rank_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactSidecar {
    pub layer: usize,
    pub config: FitConfigJson,
    pub k_requested: usize,
    pub k_effective: usize,
    pub dropped: usize,
    pub mean_canonical_correlation: f64,
}

fn save_pca(dir: &Path, view: &str, pca: &PcaModel) -> Result<()> {
    write_matrix(
        dir.join(format!("pca_{view}_loadings.mvls")),
        pca.loadings(),
        Dtype::F64,
    )?;
    write_vector(
        dir.join(format!("pca_{view}_means.mvls")),
        pca.column_means(),
    )?;
    write_vector(
        dir.join(format!("pca_{view}_ratios.mvls")),
        pca.explained_ratios(),
    )
}

fn load_pca(dir: &Path, view: &str) -> Result<PcaModel> {
    Ok(PcaModel::from_parts(
        read_matrix(dir.join(format!("pca_{view}_loadings.mvls")))?,
        read_vector(dir.join(format!("pca_{view}_means.mvls")))?,
        read_vector(dir.join(format!("pca_{view}_ratios.mvls")))?,
    )?)
}

/// Writes `artifact` into `dir`, creating it if needed.
pub fn save_artifact(dir: impl AsRef<Path>, artifact: &SubspaceArtifact) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| IoError::storage(dir, e))?;
    write_matrix(dir.join("U.mvls"), artifact.basis().matrix(), Dtype::F64)?;
    write_vector(dir.join("correlations.mvls"), artifact.correlations())?;
    save_pca(dir, "nl", artifact.pca_nl())?;
    save_pca(dir, "sym", artifact.pca_sym())?;
    let sidecar = ArtifactSidecar {
        layer: artifact.layer(),
        config: artifact.config().into(),
        k_requested: artifact.k_requested(),
        k_effective: artifact.k_effective(),
        dropped: artifact.dropped(),
        mean_canonical_correlation: artifact.mean_canonical_correlation(),
    };
    let path = dir.join(SIDECAR);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    text.push('\n');
    fs::write(&path, text).map_err(|e| IoError::storage(path, e))
}

pub fn load_artifact(dir: impl AsRef<Path>) -> Result<SubspaceArtifact> {
    let dir = dir.as_ref();
    let path = dir.join(SIDECAR);
    let text = fs::read_to_string(&path).map_err(|e| IoError::storage(&path, e))?;
    let sidecar: ArtifactSidecar = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.clone(),
        source,
    })?;
    let u = read_matrix(dir.join("U.mvls"))?;
    if u.cols() != sidecar.k_effective {
        return Err(IoError::Validation(format!(
            "{}: k_effective = {} but U has {} columns",
            path.display(),
            sidecar.k_effective,
            u.cols()
        )));
    }
    let basis = OrthonormalBasis::new(u, ORTHONORMAL_TOL)?;
    Ok(SubspaceArtifact::from_parts(
        sidecar.layer,
        basis,
        sidecar.k_requested,
        sidecar.dropped,
        read_vector(dir.join("correlations.mvls"))?,
        load_pca(dir, "nl")?,
        load_pca(dir, "sym")?,
        sidecar.config.into(),
    )?)
}

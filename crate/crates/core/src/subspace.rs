// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multi-view subspace estimation.
//!
//! Per layer: PCA on each view (retain the smallest number of components
//! reaching the variance threshold), column-centre the reduced scores, run
//! linear CCA, map the NL canonical directions back to the residual space
//! (`W = V_X A`) and orthonormalise `W` with QR to get the basis `U`.

use alloc::format;
use alloc::vec::Vec;

use crate::basis::OrthonormalBasis;
use crate::error::{Error, Result, ResultExt};
use crate::linalg::{self, canonical_sign};
use crate::matrix::Matrix;
use crate::pooling::ViewMatrixPair;

pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.98;
pub const DEFAULT_K: usize = 32;
pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Slack on the cumulative-variance comparison so that a threshold of 1.0
/// is reachable despite rounding.
const CUMULATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Fraction of variance PCA must retain in each view.
    pub variance_threshold: f64,
    /// Number of canonical components requested.
    pub k: usize,
    /// Eigenvalue floor for covariance whitening, relative to the mean diagonal.
    pub ridge: f64,
    /// Relative QR diagonal below which a back-projected direction is dropped.
    pub rank_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            k: DEFAULT_K,
            ridge: DEFAULT_RIDGE,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

impl FitConfig {
    pub fn with_k(self, k: usize) -> Self {
        Self { k, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance_threshold > 0.0 && self.variance_threshold <= 1.0) {
            return Err(Error::Parameter(format!(
                "variance threshold must lie in (0, 1], got {}",
                self.variance_threshold
            )));
        }
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Parameter(format!(
                "ridge must be >= 0, got {}",
                self.ridge
            )));
        }
        if !(self.rank_tol >= 0.0 && self.rank_tol.is_finite()) {
            return Err(Error::Parameter(format!(
                "rank_tol must be >= 0, got {}",
                self.rank_tol
            )));
        }
        Ok(())
    }
}

/// Subtracts column means. Returns the centred matrix and the means.
pub fn center_columns(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return Err(Error::Parameter(
            "cannot centre a matrix with no rows".into(),
        ));
    }
    let mut means = alloc::vec![0.0; cols];
    for row in m.row_iter() {
        for (acc, v) in means.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = rows as f64;
    means.iter_mut().for_each(|v| *v /= n);
    let mut data = Vec::with_capacity(rows * cols);
    for row in m.row_iter() {
        data.extend(row.iter().zip(&means).map(|(v, mu)| v - mu));
    }
    Ok((Matrix::new(rows, cols, data)?, means))
}

/// PCA loadings and retained explained-variance ratios for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    loadings: Matrix,
    column_means: Vec<f64>,
    explained_ratios: Vec<f64>,
}

impl PcaModel {
    /// Reassembles a model, e.g. after loading from disk.
    pub fn from_parts(
        loadings: Matrix,
        column_means: Vec<f64>,
        explained_ratios: Vec<f64>,
    ) -> Result<Self> {
        if column_means.len() != loadings.rows() || explained_ratios.len() != loadings.cols() {
            return Err(Error::Validation(format!(
                "PCA parts disagree: loadings {}x{}, {} means, {} ratios",
                loadings.rows(),
                loadings.cols(),
                column_means.len(),
                explained_ratios.len()
            )));
        }
        Ok(Self {
            loadings,
            column_means,
            explained_ratios,
        })
    }

    /// `D × d` matrix whose columns are the principal directions.
    pub fn loadings(&self) -> &Matrix {
        &self.loadings
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn explained_ratios(&self) -> &[f64] {
        &self.explained_ratios
    }

    /// Retained component count `d`.
    pub fn d(&self) -> usize {
        self.loadings.cols()
    }

    /// `(X - mean) V`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.column_means.len() {
            return Err(Error::Parameter(format!(
                "PCA fitted on {} columns, got {}",
                self.column_means.len(),
                x.cols()
            )));
        }
        let mut data = Vec::with_capacity(x.rows() * x.cols());
        for row in x.row_iter() {
            data.extend(row.iter().zip(&self.column_means).map(|(v, mu)| v - mu));
        }
        Matrix::new(x.rows(), x.cols(), data)?.matmul(&self.loadings)
    }
}

/// PCA via SVD of the centred data, keeping the smallest `d` whose
/// cumulative explained-variance ratio reaches `threshold`.
pub fn pca_fit(x: &Matrix, threshold: f64) -> Result<PcaModel> {
    if x.rows() < 2 {
        return Err(Error::Parameter(format!(
            "PCA needs at least 2 rows, got {}",
            x.rows()
        )));
    }
    if x.cols() == 0 {
        return Err(Error::Parameter("PCA needs at least one column".into()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Parameter(format!(
            "variance threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let (centered, means) = center_columns(x)?;
    let scale = x
        .as_slice()
        .iter()
        .fold(0.0_f64, |m, v| m.max(libm::fabs(*v)));
    let spread = centered
        .as_slice()
        .iter()
        .fold(0.0_f64, |m, v| m.max(libm::fabs(*v)));
    if spread <= 1e-12 * scale || spread == 0.0 {
        return Err(Error::Degenerate(
            "all rows are identical (zero variance)".into(),
        ));
    }

    let svd = linalg::svd(&centered)?;
    let energies: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    let total: f64 = energies.iter().sum();
    let ratios: Vec<f64> = energies.iter().map(|e| e / total).collect();

    let positive = ratios.iter().take_while(|r| **r > 0.0).count();
    let mut cumulative = 0.0;
    let mut d = positive;
    for (i, r) in ratios.iter().take(positive).enumerate() {
        cumulative += r;
        if cumulative >= threshold - CUMULATIVE_SLACK {
            d = i + 1;
            break;
        }
    }

    Ok(PcaModel {
        loadings: svd.v.leading_columns(d),
        column_means: means,
        explained_ratios: ratios[..d].to_vec(),
    })
}

/// Canonical directions for both views, ordered by descending correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaModel {
    a: Matrix,
    b: Matrix,
    correlations: Vec<f64>,
}

impl CcaModel {
    /// `d_X × k` NL-side directions.
    pub fn a(&self) -> &Matrix {
        &self.a
    }

    /// `d_Y × k` symbolic-side directions.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn correlations(&self) -> &[f64] {
        &self.correlations
    }
}

/// Inverse square root of a covariance matrix with eigenvalues floored at
/// `ridge * mean_diagonal`.
fn whitening(cov: &Matrix, ridge: f64, view: &str) -> Result<Matrix> {
    let n = cov.rows();
    let mean_diag = (0..n).map(|i| cov.get(i, i)).sum::<f64>() / n as f64;
    if !(mean_diag > 0.0 && mean_diag.is_finite()) {
        return Err(Error::Conditioning(format!(
            "{view} covariance has non-positive trace"
        )));
    }
    let eig = linalg::symmetric_eigen(cov)?;
    let floor = ridge * mean_diag;
    let largest = eig.values[0];
    let mut scaled = eig.vectors.clone();
    for (j, &lambda) in eig.values.iter().enumerate() {
        let lambda = lambda.max(floor);
        if !(lambda > f64::EPSILON * largest) {
            return Err(Error::Conditioning(format!(
                "{view} covariance eigenvalue {lambda:e} is singular relative to {largest:e}; \
                 increase the ridge"
            )));
        }
        let s = 1.0 / libm::sqrt(lambda);
        for i in 0..n {
            scaled.set(i, j, scaled.get(i, j) * s);
        }
    }
    scaled.matmul(&eig.vectors.transpose())
}

/// Linear CCA by whitening both views and taking the SVD of the whitened
/// cross-covariance. Inputs must already be column-centred.
pub fn cca_fit(x: &Matrix, y: &Matrix, k: usize, ridge: f64) -> Result<CcaModel> {
    let n = x.rows();
    if y.rows() != n {
        return Err(Error::Parameter(format!(
            "views have {} and {} rows",
            n,
            y.rows()
        )));
    }
    if n < 2 {
        return Err(Error::Parameter(format!(
            "CCA needs at least 2 rows, got {n}"
        )));
    }
    let limit = x.cols().min(y.cols()).min(n - 1);
    if k == 0 || k > limit {
        return Err(Error::Parameter(format!(
            "k = {k} must lie in 1..={limit} (d_X = {}, d_Y = {}, N - 1 = {})",
            x.cols(),
            y.cols(),
            n - 1
        )));
    }
    if !(ridge >= 0.0) {
        return Err(Error::Parameter(format!("ridge must be >= 0, got {ridge}")));
    }
    let denom = 1.0 / (n as f64 - 1.0);
    let sxx = x.tr_matmul(x)?.scale(denom);
    let syy = y.tr_matmul(y)?.scale(denom);
    let sxy = x.tr_matmul(y)?.scale(denom);

    let kx = whitening(&sxx, ridge, "NL")?;
    let ky = whitening(&syy, ridge, "symbolic")?;
    let t = kx.matmul(&sxy)?.matmul(&ky)?;
    let svd = linalg::svd(&t)?;

    let mut a = kx.matmul(&svd.u.leading_columns(k))?;
    let mut b = ky.matmul(&svd.v.leading_columns(k))?;
    for j in 0..k {
        let mut col = a.column(j);
        if canonical_sign(&mut col) {
            for (i, v) in col.iter().enumerate() {
                a.set(i, j, *v);
            }
            for i in 0..b.rows() {
                b.set(i, j, -b.get(i, j));
            }
        }
    }
    Ok(CcaModel {
        a,
        b,
        correlations: svd.singular_values[..k].to_vec(),
    })
}

/// `W = V A`: NL canonical directions expressed in the residual space.
pub fn back_project(pca_nl: &PcaModel, cca: &CcaModel) -> Result<Matrix> {
    if pca_nl.d() != cca.a.rows() {
        return Err(Error::Parameter(format!(
            "PCA keeps {} components but canonical directions have {} rows",
            pca_nl.d(),
            cca.a.rows()
        )));
    }
    pca_nl.loadings.matmul(&cca.a)
}

/// QR-orthonormalise `W`, dropping numerically dependent columns.
/// Returns the basis and the number of dropped columns.
pub fn orthonormalize(w: &Matrix, rank_tol: f64) -> Result<(OrthonormalBasis, usize)> {
    let (d, k) = w.shape();
    if k == 0 || d < k {
        return Err(Error::Parameter(format!(
            "orthonormalize needs D >= k >= 1, got {d}x{k}"
        )));
    }
    let qr = linalg::qr_skipping(w, rank_tol)?;
    let dropped = qr.dropped(k);
    Ok((OrthonormalBasis::new_unchecked(qr.q), dropped))
}

/// Fitted subspace for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceArtifact {
    layer: usize,
    basis: OrthonormalBasis,
    k_requested: usize,
    dropped: usize,
    correlations: Vec<f64>,
    pca_nl: PcaModel,
    pca_sym: PcaModel,
    config: FitConfig,
}

impl SubspaceArtifact {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        layer: usize,
        basis: OrthonormalBasis,
        k_requested: usize,
        dropped: usize,
        correlations: Vec<f64>,
        pca_nl: PcaModel,
        pca_sym: PcaModel,
        config: FitConfig,
    ) -> Result<Self> {
        if correlations.is_empty() {
            return Err(Error::Validation(
                "artifact has no canonical correlations".into(),
            ));
        }
        if basis.dim() != pca_nl.loadings().rows() {
            return Err(Error::Validation(format!(
                "basis dimension {} differs from NL PCA dimension {}",
                basis.dim(),
                pca_nl.loadings().rows()
            )));
        }
        if basis.rank() + dropped != correlations.len() {
            return Err(Error::Validation(format!(
                "basis rank {} + dropped {} != {} canonical components",
                basis.rank(),
                dropped,
                correlations.len()
            )));
        }
        config.validate()?;
        Ok(Self {
            layer,
            basis,
            k_requested,
            dropped,
            correlations,
            pca_nl,
            pca_sym,
            config,
        })
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }

    /// Number of orthonormal directions `k'` actually kept.
    pub fn k_effective(&self) -> usize {
        self.basis.rank()
    }

    /// Directions removed by the QR rank check.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Canonical correlations, descending. Shorter than `k_requested` when
    /// the data could not support that many components.
    pub fn correlations(&self) -> &[f64] {
        &self.correlations
    }

    pub fn pca_nl(&self) -> &PcaModel {
        &self.pca_nl
    }

    pub fn pca_sym(&self) -> &PcaModel {
        &self.pca_sym
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    pub fn mean_canonical_correlation(&self) -> f64 {
        mean_canonical_correlation(self)
    }

    pub fn apply_projector(&self, r: &[f64]) -> Result<Vec<f64>> {
        apply_projector(self, r)
    }
}

/// Runs the full pipeline on one layer's view pair.
///
/// `k` is capped at `min(d_X, d_Y, N - 1)`; the cap is visible as
/// `correlations().len() < k_requested()`.
pub fn fit_subspace(
    pair: &ViewMatrixPair,
    layer: usize,
    config: &FitConfig,
) -> Result<SubspaceArtifact> {
    config.validate()?;
    let pca_nl = pca_fit(pair.x(), config.variance_threshold).stage("pca (nl view)")?;
    let pca_sym = pca_fit(pair.y(), config.variance_threshold).stage("pca (sym view)")?;
    let (x_red, _) = center_columns(&pca_nl.transform(pair.x())?).stage("center (nl view)")?;
    let (y_red, _) = center_columns(&pca_sym.transform(pair.y())?).stage("center (sym view)")?;
    let k = config
        .k
        .min(pca_nl.d())
        .min(pca_sym.d())
        .min(pair.len() - 1);
    let cca = cca_fit(&x_red, &y_red, k, config.ridge).stage("cca")?;
    let w = back_project(&pca_nl, &cca).stage("back-projection")?;
    let (basis, dropped) = orthonormalize(&w, config.rank_tol).stage("orthonormalize")?;
    Ok(SubspaceArtifact {
        layer,
        basis,
        k_requested: config.k,
        dropped,
        correlations: cca.correlations,
        pca_nl,
        pca_sym,
        config: *config,
    })
}

/// Fits one artifact per requested `k`, all else equal.
pub fn fit_k_sweep(
    pair: &ViewMatrixPair,
    layer: usize,
    config: &FitConfig,
    ks: &[usize],
) -> Result<Vec<SubspaceArtifact>> {
    ks.iter()
        .map(|&k| fit_subspace(pair, layer, &config.with_k(k)))
        .collect()
}

/// Mean of the stored canonical correlations.
pub fn mean_canonical_correlation(artifact: &SubspaceArtifact) -> f64 {
    let rho = &artifact.correlations;
    rho.iter().sum::<f64>() / rho.len() as f64
}

/// `P r = U Uᵀ r`.
pub fn apply_projector(artifact: &SubspaceArtifact, r: &[f64]) -> Result<Vec<f64>> {
    artifact.basis.project(r)
}

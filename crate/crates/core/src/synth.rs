// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic ground truth: paired views generated from shared latent
//! factors, token streams with known subspace energy, and principal angles
//! for measuring subspace recovery.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{OrthonormalBasis, ORTHONORMAL_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{dot, norm, Matrix};
use crate::pooling::ViewMatrixPair;
use crate::rng::GaussianSource;
use crate::steering::TokenEvent;

/// Mixing maps with a larger condition number are redrawn.
pub const MAX_MIXING_CONDITION: f64 = 1e4;

const STREAM_SALT: u64 = 0x5eed_0f57_42ea_1100;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub n: usize,
    pub dim: usize,
    pub k_true: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Optional noise level per layer for [`generate_planted_layers`].
    pub per_layer_noise: Option<Vec<f64>>,
}

impl PlantedSpec {
    pub fn new(n: usize, dim: usize, k_true: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            n,
            dim,
            k_true,
            noise_sigma,
            seed,
            per_layer_noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_true == 0 || self.k_true > self.dim {
            return Err(Error::Parameter(format!(
                "k_true must lie in 1..={}, got {}",
                self.dim, self.k_true
            )));
        }
        if self.n < 2 {
            return Err(Error::Parameter(format!("need N >= 2, got {}", self.n)));
        }
        let sigmas =
            core::iter::once(&self.noise_sigma).chain(self.per_layer_noise.iter().flatten());
        for s in sigmas {
            if !(*s >= 0.0 && s.is_finite()) {
                return Err(Error::Parameter(format!(
                    "noise sigma must be >= 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Non-fatal remarks about the spec.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n <= self.dim {
            w.push(format!(
                "N = {} <= D = {}: sample covariance is rank-deficient",
                self.n, self.dim
            ));
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedResult {
    pub pair: ViewMatrixPair,
    /// Orthonormal basis of the NL mixing map's column space.
    pub true_basis_nl: OrthonormalBasis,
    pub spec: PlantedSpec,
}

fn draw_mixing(rng: &mut GaussianSource, dim: usize, k: usize) -> Result<Matrix> {
    loop {
        let g = rng.matrix(dim, k)?;
        let s = linalg::svd(&g)?.singular_values;
        let smallest = s[s.len() - 1];
        if smallest > 0.0 && s[0] / smallest <= MAX_MIXING_CONDITION {
            return Ok(g);
        }
    }
}

struct Latents {
    z: Matrix,
    gx: Matrix,
    gy: Matrix,
    rng: GaussianSource,
}

fn draw_latents(spec: &PlantedSpec) -> Result<Latents> {
    spec.validate()?;
    let mut rng = GaussianSource::new(spec.seed);
    let z = rng.matrix(spec.n, spec.k_true)?;
    let gx = draw_mixing(&mut rng, spec.dim, spec.k_true)?;
    let gy = draw_mixing(&mut rng, spec.dim, spec.k_true)?;
    Ok(Latents { z, gx, gy, rng })
}

fn noisy_image(z: &Matrix, g: &Matrix, sigma: f64, rng: &mut GaussianSource) -> Result<Matrix> {
    let clean = z.matmul(&g.transpose())?;
    let noise = rng.normal_vec(clean.rows() * clean.cols());
    let data = clean
        .as_slice()
        .iter()
        .zip(&noise)
        .map(|(c, e)| c + sigma * e)
        .collect();
    Matrix::new(clean.rows(), clean.cols(), data)
}

fn basis_of(g: &Matrix) -> Result<OrthonormalBasis> {
    let qr = linalg::qr_skipping(g, 1e-12)?;
    OrthonormalBasis::new(qr.q, ORTHONORMAL_TOL)
}

/// `X = Z Gₓᵀ + σ εₓ`, `Y = Z G_yᵀ + σ ε_y` with unit-variance latent
/// factors `Z` (N × k_true) and independent Gaussian mixing maps.
pub fn generate_planted(spec: &PlantedSpec) -> Result<PlantedResult> {
    let Latents { z, gx, gy, mut rng } = draw_latents(spec)?;
    let x = noisy_image(&z, &gx, spec.noise_sigma, &mut rng)?;
    let y = noisy_image(&z, &gy, spec.noise_sigma, &mut rng)?;
    Ok(PlantedResult {
        pair: ViewMatrixPair::from_matrices(x, y)?,
        true_basis_nl: basis_of(&gx)?,
        spec: spec.clone(),
    })
}

/// One pair per entry of `per_layer_noise`, sharing latent factors and
/// mixing maps; layer `ℓ` uses noise level `per_layer_noise[ℓ]`.
pub fn generate_planted_layers(spec: &PlantedSpec) -> Result<BTreeMap<usize, ViewMatrixPair>> {
    let sigmas = spec.per_layer_noise.clone().ok_or_else(|| {
        Error::Parameter("per_layer_noise is required for layered generation".into())
    })?;
    let Latents { z, gx, gy, mut rng } = draw_latents(spec)?;
    let mut out = BTreeMap::new();
    for (layer, sigma) in sigmas.into_iter().enumerate() {
        let x = noisy_image(&z, &gx, sigma, &mut rng)?;
        let y = noisy_image(&z, &gy, sigma, &mut rng)?;
        out.insert(layer, ViewMatrixPair::from_matrices(x, y)?);
    }
    Ok(out)
}

/// Principal angles (radians, ascending) between the column spans of two
/// orthonormal matrices. Returns `min(k1, k2)` angles.
pub fn principal_angles(u1: &Matrix, u2: &Matrix) -> Result<Vec<f64>> {
    if u1.rows() != u2.rows() {
        return Err(Error::Parameter(format!(
            "bases live in R^{} and R^{}",
            u1.rows(),
            u2.rows()
        )));
    }
    for (name, u) in [("first", u1), ("second", u2)] {
        let err = linalg::orthonormality_error(u);
        if !(err <= ORTHONORMAL_TOL) {
            return Err(Error::Validation(format!(
                "{name} basis is not orthonormal (max |UᵀU - I| = {err:e})"
            )));
        }
    }
    let cross = u1.tr_matmul(u2)?;
    let s = linalg::svd(&cross)?.singular_values;
    let mut angles: Vec<f64> = s
        .iter()
        .take(u1.cols().min(u2.cols()))
        .map(|v| libm::acos(v.clamp(0.0, 1.0)))
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

fn unit(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    (n > 1e-12).then(|| v.into_iter().map(|x| x / n).collect())
}

fn random_in_span(rng: &mut GaussianSource, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    loop {
        let c = rng.normal_vec(basis.rank());
        if let Some(v) = unit(basis.matrix().matvec(&c)?) {
            return Ok(v);
        }
    }
}

fn random_off_span(rng: &mut GaussianSource, basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    if basis.rank() == basis.dim() {
        return Err(Error::Parameter(
            "subspace fills the ambient space; no orthogonal tokens exist".into(),
        ));
    }
    loop {
        let g = rng.normal_vec(basis.dim());
        let p = basis.project(&g)?;
        let mut r: Vec<f64> = g.iter().zip(&p).map(|(a, b)| a - b).collect();
        // second pass removes the rounding residue
        let p2 = basis.project(&r)?;
        r.iter_mut().zip(&p2).for_each(|(a, b)| *a -= b);
        if let Some(v) = unit(r) {
            return Ok(v);
        }
    }
}

fn shuffled(rng: &mut GaussianSource, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        idx.swap(i, rng.below(i + 1));
    }
    idx
}

/// Number of prompt (non-generated) tokens placed before the generated
/// part of a stream of length `t`.
pub fn context_len(t: usize) -> usize {
    t / 4
}

/// Token stream whose generated tokens are unit vectors lying either
/// entirely inside `span(U_ref)` or entirely orthogonal to it.
///
/// `round(in_span_fraction · n_generated)` generated tokens are inside the
/// span. The first [`context_len`] tokens are prompt tokens with random
/// directions. `U_ref` is the planted NL basis for `spec`.
pub fn generate_token_stream(
    spec: &PlantedSpec,
    t: usize,
    in_span_fraction: f64,
) -> Result<(Vec<TokenEvent>, OrthonormalBasis)> {
    if !(0.0..=1.0).contains(&in_span_fraction) {
        return Err(Error::Parameter(format!(
            "in-span fraction must lie in [0, 1], got {in_span_fraction}"
        )));
    }
    let basis = generate_planted(spec)?.true_basis_nl;
    let mut rng = GaussianSource::new(spec.seed ^ STREAM_SALT);
    let n_ctx = context_len(t);
    let n_gen = t - n_ctx;
    let n_in = libm::round(in_span_fraction * n_gen as f64) as usize;
    let mut inside = vec![false; n_gen];
    for &i in shuffled(&mut rng, n_gen).iter().take(n_in) {
        inside[i] = true;
    }
    let mut events = Vec::with_capacity(t);
    for pos in 0..n_ctx {
        let h = unit(rng.normal_vec(spec.dim)).unwrap_or_else(|| vec![1.0; spec.dim]);
        events.push(TokenEvent {
            position: pos,
            h,
            generated: false,
        });
    }
    for (i, &is_in) in inside.iter().enumerate() {
        let h = if is_in {
            random_in_span(&mut rng, &basis)?
        } else {
            random_off_span(&mut rng, &basis)?
        };
        events.push(TokenEvent {
            position: n_ctx + i,
            h,
            generated: true,
        });
    }
    Ok((events, basis))
}

/// Token stream whose generated tokens mix an in-span and an orthogonal
/// unit direction: `h = s (cos θ · a + sin θ · b)`, so the projection
/// energy of each token is exactly `cos² θ`. `cos² θ` is drawn uniformly
/// from `energy_range`, the scale `s` from `[0.5, 2)`.
pub fn generate_mixed_stream(
    spec: &PlantedSpec,
    t: usize,
    energy_range: (f64, f64),
) -> Result<(Vec<TokenEvent>, OrthonormalBasis)> {
    let (lo, hi) = energy_range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::Parameter(format!(
            "energy range must satisfy 0 <= lo <= hi <= 1, got ({lo}, {hi})"
        )));
    }
    let basis = generate_planted(spec)?.true_basis_nl;
    let mut rng = GaussianSource::new(spec.seed ^ STREAM_SALT ^ 0x9e37_79b9);
    let n_ctx = context_len(t);
    let mut events = Vec::with_capacity(t);
    for pos in 0..t {
        let a = random_in_span(&mut rng, &basis)?;
        let b = random_off_span(&mut rng, &basis)?;
        let energy = lo + (hi - lo) * rng.uniform();
        let (c, s) = (libm::sqrt(energy), libm::sqrt(1.0 - energy));
        let scale = 0.5 + 1.5 * rng.uniform();
        let h = a
            .iter()
            .zip(&b)
            .map(|(x, y)| scale * (c * x + s * y))
            .collect();
        events.push(TokenEvent {
            position: pos,
            h,
            generated: pos >= n_ctx,
        });
    }
    debug_assert!(events.iter().all(|e| dot(&e.h, &e.h) > 0.0));
    Ok((events, basis))
}

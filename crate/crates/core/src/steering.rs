// SPDX-License-Identifier: MIT OR Apache-2.0

//! Inference-time steering of residual vectors along a subspace, the
//! λ-sweep harness with its random-direction baseline, and selection of the
//! steering layer and strength from evaluation records.
//!
//! The steered vector is
//!
//! ```text
//! h' = h + λ · ‖h‖ · P h / (‖P h‖ + ε)
//! ```
//!
//! so the perturbation points along the projection of `h` onto the subspace
//! and has magnitude at most `|λ|·‖h‖`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::basis::OrthonormalBasis;
use crate::error::{Error, Result};
use crate::linalg;
use crate::matrix::{norm, Matrix};
use crate::rng::GaussianSource;
use crate::subspace::SubspaceArtifact;

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Steering strengths searched during hyperparameter selection.
pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14];

/// Size of the candidate-layer set.
pub const DEFAULT_CANDIDATE_LAYERS: usize = 8;

/// Which tokens of a stream receive the intervention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskPolicy {
    /// Only tokens produced during generation; prompt encoding is untouched.
    #[default]
    GeneratedOnly,
    AllTokens,
}

impl MaskPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskPolicy::GeneratedOnly => "generated_only",
            MaskPolicy::AllTokens => "all_tokens",
        }
    }

    fn applies_to(self, event: &TokenEvent) -> bool {
        match self {
            MaskPolicy::GeneratedOnly => event.generated,
            MaskPolicy::AllTokens => true,
        }
    }
}

impl fmt::Display for MaskPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generated_only" => Ok(MaskPolicy::GeneratedOnly),
            "all_tokens" | "all" => Ok(MaskPolicy::AllTokens),
            other => Err(Error::Parameter(format!(
                "unknown mask policy {other:?}, expected generated_only or all_tokens"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteerConfig {
    pub layer: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub mask_policy: MaskPolicy,
}

impl SteerConfig {
    pub fn new(layer: usize, lambda: f64) -> Self {
        Self {
            layer,
            lambda,
            epsilon: DEFAULT_EPSILON,
            mask_policy: MaskPolicy::GeneratedOnly,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "lambda must be finite, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Residual vector of one token at the steering layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEvent {
    pub position: usize,
    pub h: Vec<f64>,
    /// `true` for tokens produced during generation, `false` for prompt tokens.
    pub generated: bool,
}

/// Steers one residual vector.
pub fn steer_vector(
    h: &[f64],
    basis: &OrthonormalBasis,
    lambda: f64,
    epsilon: f64,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let coords = basis.coordinates(h)?;
    if lambda == 0.0 {
        return Ok(h.to_vec());
    }
    let proj_norm = norm(&coords);
    let gain = lambda * norm(h) / (proj_norm + epsilon);
    let ph = basis.matrix().matvec(&coords)?;
    Ok(h.iter().zip(&ph).map(|(x, p)| x + gain * p).collect())
}

/// Steers a token stream with an arbitrary basis (used by the random baseline).
/// Tokens outside the mask are copied bit-for-bit.
pub fn steer_stream_with_basis(
    events: &[TokenEvent],
    config: &SteerConfig,
    basis: &OrthonormalBasis,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    events
        .iter()
        .map(|e| {
            if config.mask_policy.applies_to(e) {
                steer_vector(&e.h, basis, config.lambda, config.epsilon)
            } else {
                Ok(e.h.clone())
            }
        })
        .collect()
}

/// Steers a token stream with a fitted artifact whose layer must match the
/// configured steering layer.
pub fn steer_stream(
    events: &[TokenEvent],
    config: &SteerConfig,
    artifact: &SubspaceArtifact,
) -> Result<Vec<Vec<f64>>> {
    if artifact.layer() != config.layer {
        return Err(Error::Configuration(format!(
            "artifact was fitted at layer {} but steering targets layer {}",
            artifact.layer(),
            config.layer
        )));
    }
    steer_stream_with_basis(events, config, artifact.basis())
}

/// Seeded Haar-like random orthonormal `D × k` basis (QR of a Gaussian matrix).
pub fn random_orthonormal_basis(dim: usize, k: usize, seed: u64) -> Result<OrthonormalBasis> {
    if k == 0 || k > dim {
        return Err(Error::Parameter(format!(
            "random basis needs 1 <= k <= D, got k = {k}, D = {dim}"
        )));
    }
    let mut rng = GaussianSource::new(seed);
    loop {
        let g = rng.matrix(dim, k)?;
        let qr = linalg::qr_skipping(&g, 1e-10)?;
        if qr.kept.len() == k {
            return Ok(OrthonormalBasis::new_unchecked(qr.q));
        }
    }
}

/// Accuracy measured for one `(layer, λ)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub layer: usize,
    pub lambda: f64,
    pub accuracy: f64,
}

impl EvalRecord {
    pub fn new(layer: usize, lambda: f64, accuracy: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(Error::Validation(format!(
                "accuracy must lie in [0, 1], got {accuracy}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::Validation(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        Ok(Self {
            layer,
            lambda,
            accuracy,
        })
    }
}

/// Picks the `(layer, λ)` with the highest accuracy. Ties go to the smaller
/// λ, then the smaller layer.
pub fn select_hyperparams(records: &[EvalRecord]) -> Result<(usize, f64)> {
    let best = records
        .iter()
        .min_by(|a, b| {
            b.accuracy
                .total_cmp(&a.accuracy)
                .then(a.lambda.total_cmp(&b.lambda))
                .then(a.layer.cmp(&b.layer))
        })
        .ok_or_else(|| Error::Parameter("no evaluation records to select from".into()))?;
    Ok((best.layer, best.lambda))
}

/// The `m` layers with the highest mean canonical correlation among layers
/// `>= ceil(L / 2)`, ordered by descending score (ties: lower layer first).
///
/// `num_layers` is the depth `L` of the model; when `None` it is taken as
/// one past the largest layer id present.
pub fn candidate_layers(
    artifacts: &[SubspaceArtifact],
    m: usize,
    num_layers: Option<usize>,
) -> Result<Vec<usize>> {
    let scores: BTreeMap<usize, f64> = artifacts
        .iter()
        .map(|a| (a.layer(), a.mean_canonical_correlation()))
        .collect();
    candidate_layers_from_scores(&scores, m, num_layers)
}

/// Same as [`candidate_layers`] on precomputed `layer → ρ̄` scores.
pub fn candidate_layers_from_scores(
    scores: &BTreeMap<usize, f64>,
    m: usize,
    num_layers: Option<usize>,
) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::Parameter("candidate count must be >= 1".into()));
    }
    let depth = match num_layers {
        Some(l) => l,
        None => scores.keys().next_back().map_or(0, |l| l + 1),
    };
    let lower = depth.div_ceil(2);
    let mut eligible: Vec<(usize, f64)> = scores
        .iter()
        .filter(|(l, _)| **l >= lower)
        .map(|(l, s)| (*l, *s))
        .collect();
    if eligible.len() < m {
        return Err(Error::Parameter(format!(
            "need {m} candidate layers but only {} layers >= {lower} were fitted",
            eligible.len()
        )));
    }
    eligible.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(eligible.into_iter().take(m).map(|(l, _)| l).collect())
}

/// Direction used by a sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Subspace,
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub direction: SweepDirection,
    pub lambda: f64,
    pub metric: f64,
}

/// Steers `events` with `basis` at every λ of `grid` and scores each
/// steered stream with `metric`.
pub fn sweep_lambda<F>(
    events: &[TokenEvent],
    basis: &OrthonormalBasis,
    direction: SweepDirection,
    grid: &[f64],
    template: &SteerConfig,
    metric: &mut F,
) -> Result<Vec<SweepRow>>
where
    F: FnMut(&[TokenEvent], &[Vec<f64>]) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::Parameter("λ grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !l.is_finite()) {
        return Err(Error::Parameter(format!(
            "λ grid contains non-finite value {bad}"
        )));
    }
    grid.iter()
        .map(|&lambda| {
            let cfg = SteerConfig {
                lambda,
                ..*template
            };
            let steered = steer_stream_with_basis(events, &cfg, basis)?;
            Ok(SweepRow {
                direction,
                lambda,
                metric: metric(events, &steered)?,
            })
        })
        .collect()
}

/// Sweep with one freshly drawn random orthonormal basis of rank `k` per seed.
pub fn sweep_random<F>(
    events: &[TokenEvent],
    dim: usize,
    k: usize,
    seeds: &[u64],
    grid: &[f64],
    template: &SteerConfig,
    metric: &mut F,
) -> Result<Vec<SweepRow>>
where
    F: FnMut(&[TokenEvent], &[Vec<f64>]) -> Result<f64>,
{
    let mut rows = Vec::with_capacity(seeds.len() * grid.len());
    for &seed in seeds {
        let basis = random_orthonormal_basis(dim, k, seed)?;
        rows.extend(sweep_lambda(
            events,
            &basis,
            SweepDirection::Random { seed },
            grid,
            template,
            metric,
        )?);
    }
    Ok(rows)
}

/// Packs a stream into a `T × D` matrix.
pub fn stream_matrix(vectors: &[Vec<f64>]) -> Result<Matrix> {
    Matrix::from_rows(vectors)
}

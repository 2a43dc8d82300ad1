// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subcommand definitions and their implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logicspace_core::analysis::{
    category_energy, count_words, direction_category_matrix, explanation_span, generated_energy,
    projection_energy, roc_auc, roc_curve, step_count, style_from_counts, CountDelta,
    Normalization, StyleReport,
};
use logicspace_core::steering::{
    candidate_layers_from_scores, stream_matrix, sweep_lambda, SweepDirection, SweepRow,
    DEFAULT_EPSILON, DEFAULT_LAMBDA_GRID,
};
use logicspace_core::subspace::{
    fit_k_sweep, DEFAULT_K, DEFAULT_RANK_TOL, DEFAULT_RIDGE, DEFAULT_VARIANCE_THRESHOLD,
};
use logicspace_core::synth::{generate_mixed_stream, generate_token_stream, PlantedSpec};
use logicspace_core::{
    fit_subspace, random_orthonormal_basis, select_hyperparams, steer_stream, FitConfig,
    MaskPolicy, OrthonormalBasis, SteerConfig, SubspaceArtifact, TokenEvent, ViewMatrixPair,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::artifact::{load_artifact, save_artifact};
use crate::dataset::build_view_pair;
use crate::error::{IoError, Result};
use crate::events::{read_events, write_events};
use crate::lexicon::{category_lexicon, style_lexicons};
use crate::manifest::load_manifest;
use crate::matstore::{write_matrix, Dtype};
use crate::report::{
    read_alignment_csv, read_chain_scores, read_eval_records, read_json, write_alignment_csv,
    write_json, write_roc_csv, write_sweep_csv, RunReport,
};
use crate::synth_io::{write_planted_dataset, TokenLayout};

#[derive(Debug, Parser)]
#[command(
    name = "logicspace",
    version,
    about = "Shared NL/symbolic subspace estimation and residual steering"
)]
pub struct Cli {
    /// Directory every relative path is resolved against.
    #[arg(long, global = true, default_value = ".")]
    pub workdir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the shared subspace of one layer from a dataset manifest.
    Fit(FitArgs),
    /// Steer a token stream along a fitted subspace.
    Steer(SteerArgs),
    /// Projection energy of a token stream, optionally per token category.
    Energy(EnergyArgs),
    /// Mean canonical correlation per layer and candidate steering layers.
    Align(AlignArgs),
    /// ROC-AUC of chain energies against correctness labels.
    Auc(AucArgs),
    /// Lexical and step-count comparison of baseline and steered chains.
    Style(StyleArgs),
    /// Write a planted-subspace dataset and optional token stream.
    Synth(SynthArgs),
    /// Energy response of a token stream over a grid of steering strengths.
    Sweep(SweepArgs),
    /// Pick the best (layer, lambda) from evaluation records.
    Select(SelectArgs),
    /// Collect report files into one bundle directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitFlags {
    /// Fraction of variance retained by PCA in each view.
    #[arg(long, default_value_t = DEFAULT_VARIANCE_THRESHOLD)]
    pub variance: f64,
    /// Covariance eigenvalue floor, relative to the mean diagonal.
    #[arg(long, default_value_t = DEFAULT_RIDGE)]
    pub ridge: f64,
    /// Relative tolerance for dropping dependent directions.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
}

impl FitFlags {
    fn config(&self, k: usize) -> FitConfig {
        FitConfig {
            variance_threshold: self.variance,
            k,
            ridge: self.ridge,
            rank_tol: self.rank_tol,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Layer to fit; defaults to the manifest's only layer.
    #[arg(long)]
    pub layer: Option<usize>,
    /// Subspace rank. Repeat to fit a k-sweep into `OUT/k<K>/`.
    #[arg(long = "k", default_values_t = [DEFAULT_K])]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub fit: FitFlags,
    /// Artifact directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskArg {
    GeneratedOnly,
    #[value(alias = "all_tokens")]
    All,
}

impl From<MaskArg> for MaskPolicy {
    fn from(m: MaskArg) -> Self {
        match m {
            MaskArg::GeneratedOnly => MaskPolicy::GeneratedOnly,
            MaskArg::All => MaskPolicy::AllTokens,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StreamArgs {
    /// `T × D` MVLS matrix of residual vectors.
    #[arg(long)]
    pub input: PathBuf,
    /// Generated-token mask; defaults to `mask.json` beside the input.
    #[arg(long)]
    pub mask_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SteerArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "generated-only")]
    pub mask: MaskArg,
    /// Steering layer; defaults to the artifact's layer.
    #[arg(long)]
    pub layer: Option<usize>,
    #[command(flatten)]
    pub stream: StreamArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "f64")]
    pub dtype: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationArg {
    Global,
    Subspace,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnergyArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[command(flatten)]
    pub stream: StreamArgs,
    /// JSON array with one surface token per stream row.
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// Category lexicon JSON; the built-in table is used otherwise.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "global")]
    pub normalization: NormalizationArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlignArgs {
    /// One or more manifests; every layer they reference is fitted.
    #[arg(long, required = true, num_args = 1..)]
    pub manifest: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[command(flatten)]
    pub fit: FitFlags,
    /// CSV with `layer,value` rows.
    #[arg(long)]
    pub out: PathBuf,
    /// Also pick this many candidate layers from the upper half.
    #[arg(long, num_args = 0..=1, default_missing_value = "8")]
    pub candidates: Option<usize>,
    /// Model depth for the upper-half rule; defaults to max layer + 1.
    #[arg(long)]
    pub num_layers: Option<usize>,
    /// Save each layer's artifact under `DIR/L<layer>/`.
    #[arg(long)]
    pub save_artifacts: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AucArgs {
    /// CSV with `instance_id,mean_energy,label_correct` rows.
    #[arg(long)]
    pub scores: PathBuf,
    /// JSON summary.
    #[arg(long)]
    pub out: PathBuf,
    /// ROC curve CSV with `fpr,tpr` rows.
    #[arg(long)]
    pub roc: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StyleArgs {
    /// JSON array of baseline chain texts.
    #[arg(
        long,
        conflicts_with = "baseline_counts",
        required_unless_present = "baseline_counts"
    )]
    pub baseline: Option<PathBuf>,
    /// JSON array of steered chain texts.
    #[arg(long, requires = "baseline")]
    pub steered: Option<PathBuf>,
    /// JSON object of precomputed baseline word counts.
    #[arg(long, requires = "steered_counts")]
    pub baseline_counts: Option<PathBuf>,
    #[arg(long)]
    pub steered_counts: Option<PathBuf>,
    #[arg(long)]
    pub lexicons: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub k_true: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated noise level per layer; writes one manifest per layer.
    #[arg(long, value_delimiter = ',')]
    pub layer_noise: Option<Vec<f64>>,
    #[arg(long, default_value_t = 3)]
    pub context_tokens: usize,
    #[arg(long, default_value_t = 4)]
    pub proof_tokens: usize,
    #[arg(long, default_value = "f64")]
    pub dtype: String,
    /// Also write a token stream of this length (`events.mvls`, `mask.json`).
    #[arg(long)]
    pub stream_len: Option<usize>,
    /// Fraction of generated stream tokens lying inside the planted span.
    #[arg(long, conflicts_with = "stream_energy")]
    pub stream_fraction: Option<f64>,
    /// Per-token energy range `LO:HI` for a mixed stream.
    #[arg(long)]
    pub stream_energy: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionArg {
    Subspace,
    Random,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Comma-separated steering strengths.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_LAMBDA_GRID)]
    pub grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "subspace")]
    pub direction: DirectionArg,
    /// Seeds for random directions (default 0..20).
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "generated-only")]
    pub mask: MaskArg,
    /// CSV with `direction,lambda,seed,metric` rows.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    /// CSV with `layer,lambda,accuracy` rows.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub alignment: Option<PathBuf>,
    #[arg(long)]
    pub energy: Option<PathBuf>,
    #[arg(long)]
    pub auc: Option<PathBuf>,
    #[arg(long)]
    pub style: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolves paths against `--workdir`.
struct Ctx {
    workdir: PathBuf,
    report: RunReport,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        self.workdir.join(p)
    }

    /// An input that must already exist; a missing one is a usage error.
    fn input(&self, p: &Path) -> Result<PathBuf> {
        let full = self.path(p);
        if !full.exists() {
            return Err(IoError::Usage(format!(
                "input {} does not exist",
                full.display()
            )));
        }
        Ok(full)
    }

    fn output(&mut self, p: &Path) -> Result<PathBuf> {
        let full = self.path(p);
        if let Some(parent) = full.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| IoError::storage(parent, e))?;
            }
        }
        self.report.outputs.push(full.clone());
        Ok(full)
    }

    fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.report.warnings.push(msg);
    }

    fn mask_path(&mut self, stream: &StreamArgs) -> Result<Option<PathBuf>> {
        if let Some(m) = &stream.mask_file {
            return self.input(m).map(Some);
        }
        let sibling = self.path(&stream.input).with_file_name("mask.json");
        if sibling.is_file() {
            return Ok(Some(sibling));
        }
        self.warn("no mask file; every token is treated as generated");
        Ok(None)
    }

    fn events(&mut self, stream: &StreamArgs) -> Result<Vec<TokenEvent>> {
        let input = self.input(&stream.input)?;
        let mask = self.mask_path(stream)?;
        read_events(input, mask.as_deref())
    }
}

fn dtype(s: &str) -> Result<Dtype> {
    s.parse()
}

/// Runs one parsed command line and returns its report.
pub fn run(cli: &Cli) -> Result<RunReport> {
    let start = Instant::now();
    let (name, config) = match &cli.command {
        Command::Fit(a) => ("fit", to_json(a)),
        Command::Steer(a) => ("steer", to_json(a)),
        Command::Energy(a) => ("energy", to_json(a)),
        Command::Align(a) => ("align", to_json(a)),
        Command::Auc(a) => ("auc", to_json(a)),
        Command::Style(a) => ("style", to_json(a)),
        Command::Synth(a) => ("synth", to_json(a)),
        Command::Sweep(a) => ("sweep", to_json(a)),
        Command::Select(a) => ("select", to_json(a)),
        Command::Report(a) => ("report", to_json(a)),
    };
    let mut ctx = Ctx {
        workdir: cli.workdir.clone(),
        report: RunReport::new(name, config),
    };
    match &cli.command {
        Command::Fit(a) => run_fit(&mut ctx, a)?,
        Command::Steer(a) => run_steer(&mut ctx, a)?,
        Command::Energy(a) => run_energy(&mut ctx, a)?,
        Command::Align(a) => run_align(&mut ctx, a)?,
        Command::Auc(a) => run_auc(&mut ctx, a)?,
        Command::Style(a) => run_style(&mut ctx, a)?,
        Command::Synth(a) => run_synth(&mut ctx, a)?,
        Command::Sweep(a) => run_sweep(&mut ctx, a)?,
        Command::Select(a) => run_select(&mut ctx, a)?,
        Command::Report(a) => run_report(&mut ctx, a)?,
    }
    ctx.report.wall_time = start.elapsed().as_secs_f64();
    Ok(ctx.report)
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("arguments serialise")
}

fn only_layer(layers: impl IntoIterator<Item = usize>, what: &str) -> Result<usize> {
    let layers: Vec<usize> = layers.into_iter().collect();
    match layers.as_slice() {
        [l] => Ok(*l),
        [] => Err(IoError::Validation(format!("{what} references no layers"))),
        many => Err(IoError::Usage(format!(
            "{what} covers layers {many:?}; choose one with --layer"
        ))),
    }
}

fn run_fit(ctx: &mut Ctx, a: &FitArgs) -> Result<()> {
    let manifest = load_manifest(ctx.input(&a.manifest)?)?;
    let layer = match a.layer {
        Some(l) => l,
        None => only_layer(manifest.layers(), "manifest")?,
    };
    let pair = build_view_pair(&manifest, layer)?;
    if pair.len() <= pair.dim() {
        ctx.warn(format!(
            "N = {} instances <= D = {}: covariances are rank-deficient",
            pair.len(),
            pair.dim()
        ));
    }
    let artifacts = fit_k_sweep(&pair, layer, &a.fit.config(DEFAULT_K), &a.k)?;
    let sweep = a.k.len() > 1;
    let mut summary = Vec::new();
    for art in &artifacts {
        let dir = if sweep {
            a.out.join(format!("k{}", art.k_requested()))
        } else {
            a.out.clone()
        };
        let dir = ctx.output(&dir)?;
        save_artifact(&dir, art)?;
        let rho = art.mean_canonical_correlation();
        eprintln!(
            "layer {layer}: k = {} (k' = {}, dropped {}), mean canonical correlation {rho:.6}",
            art.k_requested(),
            art.k_effective(),
            art.dropped()
        );
        if art.correlations().len() < art.k_requested() {
            ctx.warn(format!(
                "k = {} capped at {} by the retained PCA dimensions",
                art.k_requested(),
                art.correlations().len()
            ));
        }
        summary.push(json!({
            "k_requested": art.k_requested(),
            "k_effective": art.k_effective(),
            "dropped": art.dropped(),
            "mean_canonical_correlation": rho,
        }));
    }
    ctx.report.result("layer", layer);
    ctx.report.result("fits", summary);
    Ok(())
}

fn run_steer(ctx: &mut Ctx, a: &SteerArgs) -> Result<()> {
    let artifact = load_artifact(ctx.input(&a.artifact)?)?;
    let events = ctx.events(&a.stream)?;
    let cfg = SteerConfig {
        layer: a.layer.unwrap_or(artifact.layer()),
        lambda: a.lambda,
        epsilon: a.epsilon,
        mask_policy: a.mask.into(),
    };
    let steered = steer_stream(&events, &cfg, &artifact)?;
    let out = ctx.output(&a.output)?;
    let m = stream_matrix(&steered)?;
    write_matrix(&out, &m, dtype(&a.dtype)?)?;
    let before = generated_energy(
        &events,
        &events.iter().map(|e| e.h.clone()).collect::<Vec<_>>(),
        artifact.basis(),
    );
    let after = generated_energy(&events, &steered, artifact.basis());
    if let (Ok(b), Ok(s)) = (before, after) {
        eprintln!("generated-token energy {b:.6} -> {s:.6}");
        ctx.report.result("energy_before", b);
        ctx.report.result("energy_after", s);
    }
    ctx.report.result("tokens", events.len());
    Ok(())
}

#[derive(Serialize)]
struct CategoryEntry {
    mean_energy: f64,
    count: usize,
}

#[derive(Serialize)]
struct EnergySummary {
    layer: usize,
    k_effective: usize,
    tokens: usize,
    generated_tokens: usize,
    chain_energy: f64,
    normalization: Option<&'static str>,
    categories: BTreeMap<String, CategoryEntry>,
}

#[derive(Serialize)]
struct TokenEnergyRow {
    position: usize,
    generated: u8,
    energy: f64,
}

fn run_energy(ctx: &mut Ctx, a: &EnergyArgs) -> Result<()> {
    let artifact = load_artifact(ctx.input(&a.artifact)?)?;
    let basis = artifact.basis();
    let events = ctx.events(&a.stream)?;
    let out_dir = ctx.path(&a.out);
    fs::create_dir_all(&out_dir).map_err(|e| IoError::storage(&out_dir, e))?;

    let rows: Vec<TokenEnergyRow> = events
        .iter()
        .map(|e| {
            Ok(TokenEnergyRow {
                position: e.position,
                generated: e.generated as u8,
                energy: projection_energy(&e.h, basis)?.total,
            })
        })
        .collect::<Result<_>>()?;
    let token_csv = ctx.output(&a.out.join("token_energy.csv"))?;
    {
        let mut w = csv::Writer::from_path(&token_csv).map_err(|source| IoError::Csv {
            path: token_csv.clone(),
            source,
        })?;
        for r in &rows {
            w.serialize(r).map_err(|source| IoError::Csv {
                path: token_csv.clone(),
                source,
            })?;
        }
        w.flush().map_err(|e| IoError::storage(&token_csv, e))?;
    }
    let vectors: Vec<Vec<f64>> = events.iter().map(|e| e.h.clone()).collect();
    let chain = generated_energy(&events, &vectors, basis)?;

    let mut categories = BTreeMap::new();
    let mut normalization = None;
    if let Some(tokens_path) = &a.tokens {
        let tokens: Vec<String> = read_json(ctx.input(tokens_path)?)?;
        if tokens.len() != events.len() {
            return Err(IoError::Validation(format!(
                "{} tokens for a stream of {} vectors",
                tokens.len(),
                events.len()
            )));
        }
        let lexicon = match &a.lexicon {
            Some(p) => category_lexicon(Some(&ctx.input(p)?))?,
            None => category_lexicon(None)?,
        };
        let tagged: Vec<(String, Vec<f64>)> = tokens.into_iter().zip(vectors).collect();
        let norm = match a.normalization {
            NormalizationArg::Global => Normalization::Global,
            NormalizationArg::Subspace => Normalization::Subspace,
        };
        normalization = Some(norm.as_str());
        let means = category_energy(&tagged, basis, &lexicon)?;
        let matrix = direction_category_matrix(&tagged, basis, &lexicon, norm)?;
        for (cat, count) in matrix.categories.iter().zip(&matrix.counts) {
            categories.insert(
                cat.as_str().to_string(),
                CategoryEntry {
                    mean_energy: means[cat],
                    count: *count,
                },
            );
        }
        let path = ctx.output(&a.out.join("direction_category.csv"))?;
        let csv_err = |source| IoError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        let mut header = vec!["direction".to_string()];
        header.extend(matrix.categories.iter().map(|c| c.as_str().to_string()));
        w.write_record(&header).map_err(csv_err)?;
        for j in matrix.dominant_order() {
            let mut rec = vec![j.to_string()];
            rec.extend(matrix.scores.row(j).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| IoError::storage(&path, e))?;
    }
    let summary = EnergySummary {
        layer: artifact.layer(),
        k_effective: artifact.k_effective(),
        tokens: events.len(),
        generated_tokens: events.iter().filter(|e| e.generated).count(),
        chain_energy: chain,
        normalization,
        categories,
    };
    let path = ctx.output(&a.out.join("energy.json"))?;
    write_json(&path, &summary)?;
    eprintln!("chain energy {chain:.6}");
    ctx.report.result("chain_energy", chain);
    Ok(())
}

fn run_align(ctx: &mut Ctx, a: &AlignArgs) -> Result<()> {
    let mut layers: Vec<(usize, PathBuf)> = Vec::new();
    let mut manifests = Vec::new();
    for m in &a.manifest {
        let manifest = load_manifest(ctx.input(m)?)?;
        for l in manifest.layers() {
            if layers.iter().any(|(seen, _)| *seen == l) {
                return Err(IoError::Usage(format!(
                    "layer {l} appears in more than one manifest"
                )));
            }
            layers.push((l, m.clone()));
        }
        manifests.push(manifest);
    }
    let pairs: BTreeMap<usize, ViewMatrixPair> = manifests
        .par_iter()
        .flat_map(|man| {
            man.layers()
                .into_iter()
                .map(|l| (man, l))
                .collect::<Vec<_>>()
        })
        .map(|(man, l)| Ok((l, build_view_pair(man, l)?)))
        .collect::<Result<_>>()?;
    let config = a.fit.config(a.k);
    let fitted: Vec<(usize, SubspaceArtifact)> = pairs
        .par_iter()
        .map(|(&l, p)| {
            Ok((
                l,
                fit_subspace(p, l, &config).map_err(|e| logicspace_core::Error::Layer {
                    layer: l,
                    source: Box::new(e),
                })?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut curve = BTreeMap::new();
    for (l, art) in &fitted {
        curve.insert(*l, art.mean_canonical_correlation());
        if let Some(dir) = &a.save_artifacts {
            let out = ctx.output(&dir.join(format!("L{l}")))?;
            save_artifact(&out, art)?;
        }
    }
    let out = ctx.output(&a.out)?;
    write_alignment_csv(&out, &curve)?;
    for (l, v) in &curve {
        eprintln!("layer {l}: {v:.6}");
    }
    ctx.report.result("alignment", &curve);
    if let Some(m) = a.candidates {
        let picked = candidate_layers_from_scores(&curve, m, a.num_layers)?;
        eprintln!("candidate layers {picked:?}");
        ctx.report.result("candidate_layers", picked);
    }
    Ok(())
}

fn run_auc(ctx: &mut Ctx, a: &AucArgs) -> Result<()> {
    let scores = read_chain_scores(ctx.input(&a.scores)?)?;
    let s: Vec<f64> = scores.iter().map(|c| c.mean_energy).collect();
    let l: Vec<bool> = scores.iter().map(|c| c.label_correct).collect();
    let auc = roc_auc(&s, &l)?;
    let positives = l.iter().filter(|x| **x).count();
    let out = ctx.output(&a.out)?;
    write_json(
        &out,
        &json!({"auc": auc, "instances": l.len(), "positives": positives, "negatives": l.len() - positives}),
    )?;
    if let Some(roc) = &a.roc {
        let path = ctx.output(roc)?;
        write_roc_csv(&path, &roc_curve(&s, &l)?)?;
    }
    eprintln!("ROC-AUC {auc:.6}");
    ctx.report.result("auc", auc);
    Ok(())
}

#[derive(Serialize)]
struct StepStats {
    baseline_mean: f64,
    steered_mean: f64,
    delta: f64,
}

fn mean_steps(texts: &[String]) -> f64 {
    if texts.is_empty() {
        return 0.0;
    }
    texts.iter().map(|t| step_count(t) as f64).sum::<f64>() / texts.len() as f64
}

fn style_json(report: &StyleReport, steps: Option<StepStats>) -> serde_json::Value {
    let delta = |c: &CountDelta| json!({"baseline": c.baseline, "steered": c.steered, "delta": c.delta, "percent": c.percent});
    json!({
        "groups": report.groups.iter().map(|g| json!({"group": g.group, "counts": delta(&g.counts)})).collect::<Vec<_>>(),
        "words": report.words.iter().map(|w| json!({"group": w.group, "word": w.word, "counts": delta(&w.counts)})).collect::<Vec<_>>(),
        "steps": steps,
    })
}

#[derive(Serialize)]
struct StyleCsvRow<'a> {
    group: &'a str,
    word: &'a str,
    baseline: u64,
    steered: u64,
    delta: i64,
    percent: Option<f64>,
}

fn run_style(ctx: &mut Ctx, a: &StyleArgs) -> Result<()> {
    let lexicons = match &a.lexicons {
        Some(p) => style_lexicons(Some(&ctx.input(p)?))?,
        None => style_lexicons(None)?,
    };
    let (report, steps) = match (
        &a.baseline,
        &a.steered,
        &a.baseline_counts,
        &a.steered_counts,
    ) {
        (Some(b), Some(s), _, _) => {
            let base: Vec<String> = read_json(ctx.input(b)?)?;
            let steer: Vec<String> = read_json(ctx.input(s)?)?;
            let spans = |texts: &[String]| -> Vec<String> {
                texts
                    .iter()
                    .map(|t| explanation_span(t).to_string())
                    .collect()
            };
            let report = style_from_counts(
                &count_words(&spans(&base), &lexicons),
                &count_words(&spans(&steer), &lexicons),
                &lexicons,
            );
            let (bm, sm) = (mean_steps(&base), mean_steps(&steer));
            (
                report,
                Some(StepStats {
                    baseline_mean: bm,
                    steered_mean: sm,
                    delta: sm - bm,
                }),
            )
        }
        (_, _, Some(b), Some(s)) => {
            let base: BTreeMap<String, u64> = read_json(ctx.input(b)?)?;
            let steer: BTreeMap<String, u64> = read_json(ctx.input(s)?)?;
            (style_from_counts(&base, &steer, &lexicons), None)
        }
        _ => {
            return Err(IoError::Usage(
                "give --baseline/--steered texts or --baseline-counts/--steered-counts".into(),
            ))
        }
    };
    let dir = a.out.clone();
    let json_path = ctx.output(&dir.join("style.json"))?;
    write_json(&json_path, &style_json(&report, steps))?;
    let words = ctx.output(&dir.join("style_words.csv"))?;
    write_style_csv(
        &words,
        report
            .words
            .iter()
            .map(|w| (w.group.as_str(), w.word.as_str(), &w.counts)),
    )?;
    let groups = ctx.output(&dir.join("style_groups.csv"))?;
    write_style_csv(
        &groups,
        report
            .groups
            .iter()
            .map(|g| (g.group.as_str(), "", &g.counts)),
    )?;
    for g in &report.groups {
        eprintln!(
            "{}: {} -> {} ({})",
            g.group,
            g.counts.baseline,
            g.counts.steered,
            g.counts
                .percent
                .map_or("n/a".to_string(), |p| format!("{p:+.1}%"))
        );
    }
    Ok(())
}

fn write_style_csv<'a>(
    path: &Path,
    rows: impl Iterator<Item = (&'a str, &'a str, &'a CountDelta)>,
) -> Result<()> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (group, word, c) in rows {
        w.serialize(StyleCsvRow {
            group,
            word,
            baseline: c.baseline,
            steered: c.steered,
            delta: c.delta,
            percent: c.percent,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| IoError::storage(path, e))
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| IoError::Usage(format!("energy range {s:?} must look like LO:HI")))?;
    let p = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| IoError::Usage(format!("bad number {v:?} in energy range")))
    };
    Ok((p(lo)?, p(hi)?))
}

fn run_synth(ctx: &mut Ctx, a: &SynthArgs) -> Result<()> {
    let mut spec = PlantedSpec::new(a.n, a.dim, a.k_true, a.sigma, a.seed);
    spec.per_layer_noise = a.layer_noise.clone();
    let layout = TokenLayout {
        context: a.context_tokens,
        proof: a.proof_tokens,
    };
    let dir = ctx.path(&a.out);
    let out = write_planted_dataset(&dir, &spec, layout, dtype(&a.dtype)?)?;
    for w in &out.warnings {
        ctx.warn(w.clone());
    }
    for p in out.manifests.values() {
        ctx.report.outputs.push(p.clone());
    }
    ctx.report.outputs.push(out.true_basis.clone());
    if let Some(t) = a.stream_len {
        let (events, basis) = match (&a.stream_energy, a.stream_fraction) {
            (Some(r), _) => generate_mixed_stream(&spec, t, parse_range(r)?)?,
            (None, f) => generate_token_stream(&spec, t, f.unwrap_or(0.5))?,
        };
        let m = ctx.output(&a.out.join("events.mvls"))?;
        let mask = ctx.output(&a.out.join("mask.json"))?;
        write_events(&m, &mask, &events, Dtype::F64)?;
        let b = ctx.output(&a.out.join("stream_basis.mvls"))?;
        write_matrix(&b, basis.matrix(), Dtype::F64)?;
    }
    eprintln!(
        "wrote {} instance(s) x {} layer(s) to {}",
        spec.n,
        out.manifests.len(),
        dir.display()
    );
    ctx.report.result("manifests", &out.manifests);
    Ok(())
}

fn sweep_rows(
    events: &[TokenEvent],
    steer_basis: &OrthonormalBasis,
    metric_basis: &OrthonormalBasis,
    direction: SweepDirection,
    grid: &[f64],
    template: &SteerConfig,
) -> logicspace_core::Result<Vec<SweepRow>> {
    let mut metric = |ev: &[TokenEvent], out: &[Vec<f64>]| generated_energy(ev, out, metric_basis);
    sweep_lambda(events, steer_basis, direction, grid, template, &mut metric)
}

fn run_sweep(ctx: &mut Ctx, a: &SweepArgs) -> Result<()> {
    let artifact = load_artifact(ctx.input(&a.artifact)?)?;
    let events = ctx.events(&a.stream)?;
    let template = SteerConfig {
        layer: artifact.layer(),
        lambda: 0.0,
        epsilon: a.epsilon,
        mask_policy: a.mask.into(),
    };
    template.validate()?;
    let basis = artifact.basis();
    let rows = match a.direction {
        DirectionArg::Subspace => sweep_rows(
            &events,
            basis,
            basis,
            SweepDirection::Subspace,
            &a.grid,
            &template,
        )?,
        DirectionArg::Random => {
            let seeds = a.seeds.clone().unwrap_or_else(|| (0..20).collect());
            let per_seed: Vec<Vec<SweepRow>> = seeds
                .par_iter()
                .map(|&seed| {
                    let random = random_orthonormal_basis(basis.dim(), basis.rank(), seed)?;
                    sweep_rows(
                        &events,
                        &random,
                        basis,
                        SweepDirection::Random { seed },
                        &a.grid,
                        &template,
                    )
                })
                .collect::<logicspace_core::Result<_>>()?;
            per_seed.into_iter().flatten().collect()
        }
    };
    let out = ctx.output(&a.out)?;
    write_sweep_csv(&out, &rows)?;
    ctx.report.result("rows", rows.len());
    Ok(())
}

fn run_select(ctx: &mut Ctx, a: &SelectArgs) -> Result<()> {
    let records = read_eval_records(ctx.input(&a.records)?)?;
    let (layer, lambda) = select_hyperparams(&records)?;
    let accuracy = records
        .iter()
        .find(|r| r.layer == layer && r.lambda == lambda)
        .map(|r| r.accuracy);
    eprintln!("selected layer {layer}, lambda {lambda}");
    if let Some(out) = &a.out {
        let path = ctx.output(out)?;
        write_json(
            &path,
            &json!({"layer": layer, "lambda": lambda, "accuracy": accuracy}),
        )?;
    }
    ctx.report.result("layer", layer);
    ctx.report.result("lambda", lambda);
    Ok(())
}

fn run_report(ctx: &mut Ctx, a: &ReportArgs) -> Result<()> {
    let dir = ctx.path(&a.out);
    fs::create_dir_all(&dir).map_err(|e| IoError::storage(&dir, e))?;
    let mut files = Vec::new();
    let mut missing = Vec::new();
    if let Some(p) = &a.alignment {
        let curve = read_alignment_csv(ctx.input(p)?)?;
        let out = ctx.output(&a.out.join("alignment.csv"))?;
        write_alignment_csv(&out, &curve)?;
        files.push("alignment.csv");
    } else {
        missing.push("alignment");
    }
    for (input, name) in [(&a.energy, "energy"), (&a.auc, "auc"), (&a.style, "style")] {
        match input {
            Some(p) => {
                let value: serde_json::Value = read_json(ctx.input(p)?)?;
                let file = format!("{name}.json");
                let out = ctx.output(&a.out.join(&file))?;
                write_json(&out, &value)?;
                files.push(match name {
                    "energy" => "energy.json",
                    "auc" => "auc.json",
                    _ => "style.json",
                });
            }
            None => missing.push(name),
        }
    }
    for m in &missing {
        ctx.warn(format!("no {m} input; omitted from the bundle"));
    }
    let index = ctx.output(&a.out.join("index.json"))?;
    write_json(&index, &json!({"files": files, "missing": missing}))?;
    Ok(())
}

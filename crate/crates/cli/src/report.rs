// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run reports and the plot-ready CSV tables emitted by the commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use logicspace_core::analysis::ChainScore;
use logicspace_core::steering::{SweepDirection, SweepRow};
use logicspace_core::EvalRecord;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

/// Machine-readable summary printed after every successful command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    /// Seconds.
    pub wall_time: f64,
    pub warnings: Vec<String>,
    /// Headline numbers (ρ̄, AUC, selected layer, ...).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub results: serde_json::Map<String, serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            outputs: Vec::new(),
            wall_time: 0.0,
            warnings: Vec::new(),
            results: serde_json::Map::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(
            key.to_string(),
            serde_json::to_value(value).expect("result serialises"),
        );
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| IoError::storage(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct AlignmentRow {
    layer: usize,
    value: f64,
}

pub fn write_alignment_csv(path: impl AsRef<Path>, curve: &BTreeMap<usize, f64>) -> Result<()> {
    write_rows(
        path.as_ref(),
        curve
            .iter()
            .map(|(&layer, &value)| AlignmentRow { layer, value }),
    )
}

pub fn read_alignment_csv(path: impl AsRef<Path>) -> Result<BTreeMap<usize, f64>> {
    let rows: Vec<AlignmentRow> = read_rows(path.as_ref())?;
    Ok(rows.into_iter().map(|r| (r.layer, r.value)).collect())
}

#[derive(Serialize)]
struct RocRow {
    fpr: f64,
    tpr: f64,
}

pub fn write_roc_csv(path: impl AsRef<Path>, points: &[(f64, f64)]) -> Result<()> {
    write_rows(
        path.as_ref(),
        points.iter().map(|&(fpr, tpr)| RocRow { fpr, tpr }),
    )
}

#[derive(Serialize)]
struct SweepCsvRow {
    direction: &'static str,
    lambda: f64,
    seed: Option<u64>,
    metric: f64,
}

pub fn write_sweep_csv(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    write_rows(
        path.as_ref(),
        rows.iter().map(|r| {
            let (direction, seed) = match r.direction {
                SweepDirection::Subspace => ("subspace", None),
                SweepDirection::Random { seed } => ("random", Some(seed)),
            };
            SweepCsvRow {
                direction,
                lambda: r.lambda,
                seed,
                metric: r.metric,
            }
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct EvalRow {
    layer: usize,
    lambda: f64,
    accuracy: f64,
}

/// Evaluation records from a CSV with header `layer,lambda,accuracy`.
pub fn read_eval_records(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>> {
    let rows: Vec<EvalRow> = read_rows(path.as_ref())?;
    rows.into_iter()
        .map(|r| Ok(EvalRecord::new(r.layer, r.lambda, r.accuracy)?))
        .collect()
}

pub fn write_eval_records(path: impl AsRef<Path>, records: &[EvalRecord]) -> Result<()> {
    write_rows(
        path.as_ref(),
        records.iter().map(|r| EvalRow {
            layer: r.layer,
            lambda: r.lambda,
            accuracy: r.accuracy,
        }),
    )
}

#[derive(Serialize, Deserialize)]
struct ChainScoreRow {
    instance_id: String,
    mean_energy: f64,
    label_correct: u8,
}

/// Chain scores from a CSV with header `instance_id,mean_energy,label_correct`
/// (`label_correct` is 0 or 1).
pub fn read_chain_scores(path: impl AsRef<Path>) -> Result<Vec<ChainScore>> {
    let path = path.as_ref();
    let rows: Vec<ChainScoreRow> = read_rows(path)?;
    rows.into_iter()
        .map(|r| {
            let label_correct = match r.label_correct {
                0 => false,
                1 => true,
                other => {
                    return Err(IoError::Validation(format!(
                        "{}: label_correct must be 0 or 1, got {other} for {:?}",
                        path.display(),
                        r.instance_id
                    )))
                }
            };
            Ok(ChainScore {
                instance_id: r.instance_id,
                mean_energy: r.mean_energy,
                label_correct,
            })
        })
        .collect()
}

pub fn write_chain_scores(path: impl AsRef<Path>, scores: &[ChainScore]) -> Result<()> {
    write_rows(
        path.as_ref(),
        scores.iter().map(|s| ChainScoreRow {
            instance_id: s.instance_id.clone(),
            mean_energy: s.mean_energy,
            label_correct: s.label_correct as u8,
        }),
    )
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).expect("report serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::storage(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::storage(path, e))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

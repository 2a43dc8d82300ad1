// SPDX-License-Identifier: MIT OR Apache-2.0

//! Token streams on disk: a `T × D` MVLS matrix of residual vectors plus an
//! optional `mask.json` of the form `{"generated": [false, false, true, ...]}`.

use std::fs;
use std::path::Path;

use logicspace_core::steering::stream_matrix;
use logicspace_core::{Matrix, TokenEvent};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};
use crate::matstore::{read_matrix, write_matrix, Dtype};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMask {
    pub generated: Vec<bool>,
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<TokenMask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::storage(path, e))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_mask(path: impl AsRef<Path>, mask: &TokenMask) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string(mask).expect("mask serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| IoError::storage(path, e))
}

/// Pairs matrix rows with mask flags. Without a mask every token counts as
/// generated.
pub fn events_from(m: &Matrix, mask: Option<&TokenMask>) -> Result<Vec<TokenEvent>> {
    if let Some(mask) = mask {
        if mask.generated.len() != m.rows() {
            return Err(IoError::Validation(format!(
                "mask has {} entries but the stream has {} tokens",
                mask.generated.len(),
                m.rows()
            )));
        }
    }
    Ok(m.row_iter()
        .enumerate()
        .map(|(i, row)| TokenEvent {
            position: i,
            h: row.to_vec(),
            generated: mask.is_none_or(|mk| mk.generated[i]),
        })
        .collect())
}

pub fn read_events(matrix: impl AsRef<Path>, mask: Option<&Path>) -> Result<Vec<TokenEvent>> {
    let m = read_matrix(matrix)?;
    let mask = mask.map(read_mask).transpose()?;
    events_from(&m, mask.as_ref())
}

pub fn write_events(
    matrix: impl AsRef<Path>,
    mask: impl AsRef<Path>,
    events: &[TokenEvent],
    dtype: Dtype,
) -> Result<()> {
    let vectors: Vec<Vec<f64>> = events.iter().map(|e| e.h.clone()).collect();
    write_matrix(matrix, &stream_matrix(&vectors)?, dtype)?;
    write_mask(
        mask,
        &TokenMask {
            generated: events.iter().map(|e| e.generated).collect(),
        },
    )
}

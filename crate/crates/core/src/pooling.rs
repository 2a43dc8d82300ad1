// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mean-pooling of per-token activations over proof-token spans and
//! stacking of the pooled vectors into paired view matrices.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Surface form of a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum View {
    /// Natural-language proof.
    Nl,
    /// Symbolic proof.
    Sym,
}

impl View {
    pub const ALL: [View; 2] = [View::Nl, View::Sym];

    pub fn as_str(self) -> &'static str {
        match self {
            View::Nl => "nl",
            View::Sym => "sym",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nl" => Ok(View::Nl),
            "sym" => Ok(View::Sym),
            other => Err(Error::Validation(format!(
                "unknown view name {other:?}, expected \"nl\" or \"sym\""
            ))),
        }
    }
}

/// Half-open token ranges marking the proof tokens of one instance in one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanRecord {
    instance_id: String,
    view: View,
    ranges: Vec<(usize, usize)>,
}

impl SpanRecord {
    /// Ranges must be non-empty, sorted, non-overlapping, each with `start < end`.
    pub fn new(
        instance_id: impl Into<String>,
        view: View,
        ranges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let instance_id = instance_id.into();
        if ranges.is_empty() {
            return Err(Error::Validation(format!(
                "span record for {instance_id}/{view} has no ranges"
            )));
        }
        for &(s, e) in &ranges {
            if s >= e {
                return Err(Error::Validation(format!(
                    "span [{s}, {e}) for {instance_id}/{view} is empty or reversed"
                )));
            }
        }
        for w in ranges.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Validation(format!(
                    "spans [{}, {}) and [{}, {}) for {instance_id}/{view} overlap or are unsorted",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self {
            instance_id,
            view,
            ranges,
        })
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn ranges(&self) -> &[(usize, usize)] {
        &self.ranges
    }

    /// Total number of tokens covered.
    pub fn token_count(&self) -> usize {
        self.ranges.iter().map(|(s, e)| e - s).sum()
    }

    /// Token indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranges.iter().flat_map(|&(s, e)| s..e)
    }
}

/// Arithmetic mean of the activation rows inside the span union.
///
/// Rows are summed in ascending token order, so the result does not depend
/// on how callers schedule instances.
pub fn mean_pool(activations: &Matrix, spans: &SpanRecord) -> Result<Vec<f64>> {
    let t = activations.rows();
    let last = spans.ranges.last().map(|r| r.1).unwrap_or(0);
    if last > t {
        return Err(Error::Bounds {
            index: last - 1,
            len: t,
        });
    }
    let count = spans.token_count();
    if count == 0 {
        return Err(Error::Validation(format!(
            "empty span union for {}",
            spans.instance_id
        )));
    }
    let mut acc = vec![0.0; activations.cols()];
    for i in spans.indices() {
        for (a, v) in acc.iter_mut().zip(activations.row(i)) {
            *a += v;
        }
    }
    let n = count as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Row-aligned NL (`x`) and symbolic (`y`) view matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrixPair {
    x: Matrix,
    y: Matrix,
    instance_ids: Vec<String>,
}

impl ViewMatrixPair {
    pub fn new(x: Matrix, y: Matrix, instance_ids: Vec<String>) -> Result<Self> {
        if x.shape() != y.shape() {
            return Err(Error::Validation(format!(
                "view shapes differ: NL {}x{} vs symbolic {}x{}",
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols()
            )));
        }
        if x.rows() < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 instances, got {}",
                x.rows()
            )));
        }
        if instance_ids.len() != x.rows() {
            return Err(Error::Validation(format!(
                "{} instance ids for {} rows",
                instance_ids.len(),
                x.rows()
            )));
        }
        let mut seen = BTreeSet::new();
        for id in &instance_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!("duplicate instance id {id:?}")));
            }
        }
        Ok(Self { x, y, instance_ids })
    }

    /// Pair without instance metadata; ids become `"0"`, `"1"`, ...
    pub fn from_matrices(x: Matrix, y: Matrix) -> Result<Self> {
        let ids = (0..x.rows()).map(|i| format!("{i}")).collect();
        Self::new(x, y, ids)
    }

    /// Stacks `(instance_id, nl_vector, sym_vector)` rows in the given order.
    pub fn stack(rows: Vec<(String, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.1.len());
        let mut ids = Vec::with_capacity(rows.len());
        let mut xs = Vec::with_capacity(rows.len());
        let mut ys = Vec::with_capacity(rows.len());
        for (id, x, y) in rows {
            if x.len() != d || y.len() != d {
                return Err(Error::Validation(format!(
                    "instance {id:?} has dimensions nl={} sym={}, expected {d}",
                    x.len(),
                    y.len()
                )));
            }
            ids.push(id);
            xs.push(x);
            ys.push(y);
        }
        Self::new(Matrix::from_rows(&xs)?, Matrix::from_rows(&ys)?, ids)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }
}

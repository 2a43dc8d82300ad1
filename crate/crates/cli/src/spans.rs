// SPDX-License-Identifier: MIT OR Apache-2.0

//! Proof-token span files: JSON lines of
//! `{"instance_id": ..., "view": "nl"|"sym", "ranges": [[start, end], ...]}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use logicspace_core::{SpanRecord, View};
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct SpanLine {
    instance_id: String,
    view: String,
    ranges: Vec<[usize; 2]>,
}

impl From<&SpanRecord> for SpanLine {
    fn from(r: &SpanRecord) -> Self {
        Self {
            instance_id: r.instance_id().to_string(),
            view: r.view().as_str().to_string(),
            ranges: r.ranges().iter().map(|&(s, e)| [s, e]).collect(),
        }
    }
}

/// Parses span records from JSON-lines text. Blank lines are skipped.
pub fn parse_spans(text: &str) -> Result<Vec<SpanRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: SpanLine = serde_json::from_str(line)
            .map_err(|e| IoError::Validation(format!("span line {}: {e}", lineno + 1)))?;
        let view: View = raw
            .view
            .parse()
            .map_err(|e| IoError::Validation(format!("span line {}: {e}", lineno + 1)))?;
        let ranges = raw.ranges.iter().map(|r| (r[0], r[1])).collect();
        let record = SpanRecord::new(raw.instance_id, view, ranges)
            .map_err(|e| IoError::Validation(format!("span line {}: {e}", lineno + 1)))?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_spans(path: impl AsRef<Path>) -> Result<Vec<SpanRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::storage(path, e))?;
    parse_spans(&text).map_err(|e| match e {
        IoError::Validation(msg) => IoError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn format_spans(records: &[SpanRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&SpanLine::from(r)).expect("span line serialises"));
        out.push('\n');
    }
    out
}

pub fn write_spans(path: impl AsRef<Path>, records: &[SpanRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| IoError::storage(path, e))?;
    f.write_all(format_spans(records).as_bytes())
        .map_err(|e| IoError::storage(path, e))
}

/// The record for `(instance_id, view)`; errors if absent or repeated.
pub fn find_span<'a>(
    records: &'a [SpanRecord],
    instance_id: &str,
    view: View,
) -> Result<&'a SpanRecord> {
    let mut hits = records
        .iter()
        .filter(|r| r.instance_id() == instance_id && r.view() == view);
    let first = hits.next().ok_or_else(|| {
        IoError::Validation(format!(
            "no {view} span record for instance {instance_id:?}"
        ))
    })?;
    if hits.next().is_some() {
        return Err(IoError::Validation(format!(
            "more than one {view} span record for instance {instance_id:?}"
        )));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![
            SpanRecord::new("a", View::Nl, vec![(0, 2), (4, 5)]).unwrap(),
            SpanRecord::new("a", View::Sym, vec![(1, 3)]).unwrap(),
        ];
        let text = format_spans(&recs);
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"instance_id":"a","view":"nl","ranges":[[0,2],[4,5]]}"#
        );
        assert_eq!(parse_spans(&text).unwrap(), recs);
        assert_eq!(
            find_span(&recs, "a", View::Sym).unwrap().ranges(),
            &[(1, 3)]
        );
        assert!(find_span(&recs, "b", View::Nl).is_err());
    }

    #[test]
    fn rejects_overlap_and_unknown_view() {
        assert!(parse_spans(r#"{"instance_id":"a","view":"nl","ranges":[[0,3],[2,4]]}"#).is_err());
        assert!(parse_spans(r#"{"instance_id":"a","view":"symbolic","ranges":[[0,3]]}"#).is_err());
        assert!(parse_spans(r#"{"instance_id":"a","view":"nl","ranges":[]}"#).is_err());
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Length and lexical statistics of generated explanations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::analysis::tagging::normalize_token;
use crate::error::{Error, Result};

/// Line prefix that terminates an explanation.
pub const TRUTH_VALUE_MARKER: &str = "Truth value:";

/// One named word group (e.g. logical connectives).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordGroup {
    pub name: String,
    pub words: Vec<String>,
}

/// Disjoint, lowercase word groups used for frequency comparisons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleLexicons {
    groups: Vec<WordGroup>,
}

impl StyleLexicons {
    pub fn new(groups: Vec<WordGroup>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for g in &groups {
            for w in &g.words {
                if w.is_empty() || *w != w.to_lowercase() {
                    return Err(Error::Validation(format!(
                        "style word {w:?} in group {} must be non-empty lowercase",
                        g.name
                    )));
                }
                if !seen.insert(w.as_str()) {
                    return Err(Error::Validation(format!(
                        "style word {w:?} appears more than once"
                    )));
                }
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[WordGroup] {
        &self.groups
    }

    fn contains(&self, word: &str) -> bool {
        self.groups
            .iter()
            .any(|g| g.words.iter().any(|w| w == word))
    }
}

/// `(steered - baseline) / baseline · 100`, or `None` for a zero baseline.
pub fn percent_delta(baseline: u64, steered: u64) -> Option<f64> {
    if baseline == 0 {
        return None;
    }
    Some((steered as f64 - baseline as f64) / baseline as f64 * 100.0)
}

/// Counts of lexicon words over whitespace-separated, normalised tokens.
pub fn count_words<S: AsRef<str>>(texts: &[S], lexicons: &StyleLexicons) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for text in texts {
        for raw in text.as_ref().split_whitespace() {
            let tok = normalize_token(raw);
            if lexicons.contains(&tok) {
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountDelta {
    pub baseline: u64,
    pub steered: u64,
    pub delta: i64,
    pub percent: Option<f64>,
}

impl CountDelta {
    pub fn new(baseline: u64, steered: u64) -> Self {
        Self {
            baseline,
            steered,
            delta: steered as i64 - baseline as i64,
            percent: percent_delta(baseline, steered),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordRow {
    pub group: String,
    pub word: String,
    pub counts: CountDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub group: String,
    pub counts: CountDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleReport {
    pub words: Vec<WordRow>,
    pub groups: Vec<GroupRow>,
}

/// Builds the report from precomputed counts. Missing words count as zero;
/// group totals are sums over member words.
pub fn style_from_counts(
    baseline: &BTreeMap<String, u64>,
    steered: &BTreeMap<String, u64>,
    lexicons: &StyleLexicons,
) -> StyleReport {
    let mut words = Vec::new();
    let mut groups = Vec::new();
    for g in &lexicons.groups {
        let (mut gb, mut gs) = (0u64, 0u64);
        for w in &g.words {
            let b = baseline.get(w).copied().unwrap_or(0);
            let s = steered.get(w).copied().unwrap_or(0);
            gb += b;
            gs += s;
            words.push(WordRow {
                group: g.name.clone(),
                word: w.to_string(),
                counts: CountDelta::new(b, s),
            });
        }
        groups.push(GroupRow {
            group: g.name.clone(),
            counts: CountDelta::new(gb, gs),
        });
    }
    StyleReport { words, groups }
}

pub fn style_stats<S: AsRef<str>>(
    baseline_texts: &[S],
    steered_texts: &[S],
    lexicons: &StyleLexicons,
) -> StyleReport {
    style_from_counts(
        &count_words(baseline_texts, lexicons),
        &count_words(steered_texts, lexicons),
        lexicons,
    )
}

/// Text preceding the first line that starts with `Truth value:`.
pub fn explanation_span(text: &str) -> &str {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim_start().starts_with(TRUTH_VALUE_MARKER) {
            return &text[..offset];
        }
        offset += line.len();
    }
    text
}

/// Non-empty lines before the `Truth value:` line (all of them if absent).
pub fn step_count(chain_text: &str) -> usize {
    explanation_span(chain_text)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .count()
}

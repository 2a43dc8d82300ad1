// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subspace diagnostics: projection energy, token categories, alignment
//! curves, ROC-AUC and lexical style statistics.

pub mod alignment;
pub mod auc;
pub mod energy;
pub mod style;
pub mod tagging;

pub use alignment::{fit_layers, layerwise_alignment};
pub use auc::{roc_auc, roc_curve};
pub use energy::{
    category_energy, chain_energy, direction_category_matrix, generated_energy, projection_energy,
    DirectionCategoryMatrix, EnergyReport, Normalization,
};
pub use style::{
    count_words, explanation_span, percent_delta, step_count, style_from_counts, style_stats,
    CountDelta, GroupRow, StyleLexicons, StyleReport, WordGroup, WordRow,
};
pub use tagging::{normalize_token, tag_token, Lexicon, TokenCategory};

/// Correctness score of one generated chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainScore {
    pub instance_id: alloc::string::String,
    pub mean_energy: f64,
    pub label_correct: bool,
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Lexicon-based token categories.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TokenCategory {
    Negation,
    Quantifier,
    Copula,
    Entity,
    Concept,
    Structure,
    Property,
    /// Matches no lexicon entry; excluded from aggregations.
    Other,
}

impl TokenCategory {
    /// Every category a lexicon can assign, in display order.
    pub const TAGGED: [TokenCategory; 7] = [
        TokenCategory::Negation,
        TokenCategory::Quantifier,
        TokenCategory::Copula,
        TokenCategory::Entity,
        TokenCategory::Concept,
        TokenCategory::Structure,
        TokenCategory::Property,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TokenCategory::Negation => "negation",
            TokenCategory::Quantifier => "quantifier",
            TokenCategory::Copula => "copula",
            TokenCategory::Entity => "entity",
            TokenCategory::Concept => "concept",
            TokenCategory::Structure => "structure",
            TokenCategory::Property => "property",
            TokenCategory::Other => "other",
        }
    }
}

impl fmt::Display for TokenCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TokenCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TokenCategory::TAGGED
            .iter()
            .chain(core::iter::once(&TokenCategory::Other))
            .find(|c| c.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Validation(format!("unknown token category {s:?}")))
    }
}

/// Lowercases and strips leading/trailing ASCII punctuation.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_lowercase()
}

/// Word → category table. Each word belongs to at most one category.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    words: BTreeMap<String, TokenCategory>,
}

impl Lexicon {
    pub fn from_lists<I, W, S>(lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TokenCategory, W)>,
        W: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut words = BTreeMap::new();
        for (category, list) in lists {
            if category == TokenCategory::Other {
                return Err(Error::Validation(
                    "the \"other\" category cannot carry a word list".into(),
                ));
            }
            for word in list {
                let w = normalize_token(word.as_ref());
                if w.is_empty() {
                    continue;
                }
                if let Some(prev) = words.insert(w.clone(), category) {
                    if prev != category {
                        return Err(Error::Validation(format!(
                            "word {w:?} listed under both {prev} and {category}"
                        )));
                    }
                }
            }
        }
        Ok(Self { words })
    }

    pub fn tag(&self, token: &str) -> TokenCategory {
        tag_token(token, self)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words of one category, sorted.
    pub fn words_in(&self, category: TokenCategory) -> Vec<String> {
        self.words
            .iter()
            .filter(|(_, c)| **c == category)
            .map(|(w, _)| w.to_string())
            .collect()
    }
}

pub fn tag_token(token: &str, lexicon: &Lexicon) -> TokenCategory {
    lexicon
        .words
        .get(&normalize_token(token))
        .copied()
        .unwrap_or(TokenCategory::Other)
}

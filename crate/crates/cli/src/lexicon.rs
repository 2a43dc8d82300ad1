// SPDX-License-Identifier: MIT OR Apache-2.0

//! Lexicon files: JSON objects mapping a category or group name to a word
//! list. Default tables are compiled in from `data/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use logicspace_core::analysis::{Lexicon, StyleLexicons, TokenCategory, WordGroup};

use crate::error::{IoError, Result};

pub const DEFAULT_CATEGORY_LEXICON: &str = include_str!("../data/category_lexicon.json");
pub const DEFAULT_STYLE_LEXICONS: &str = include_str!("../data/style_lexicons.json");

fn parse_map(text: &str, origin: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    serde_json::from_str(text).map_err(|source| IoError::Json {
        path: origin.to_path_buf(),
        source,
    })
}

pub fn parse_category_lexicon(text: &str, origin: &Path) -> Result<Lexicon> {
    let map = parse_map(text, origin)?;
    let mut lists = Vec::with_capacity(map.len());
    for (name, words) in map {
        let cat: TokenCategory = name.parse()?;
        lists.push((cat, words));
    }
    Ok(Lexicon::from_lists(lists)?)
}

pub fn parse_style_lexicons(text: &str, origin: &Path) -> Result<StyleLexicons> {
    let groups = parse_map(text, origin)?
        .into_iter()
        .map(|(name, words)| WordGroup { name, words })
        .collect();
    Ok(StyleLexicons::new(groups)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| IoError::storage(path, e))
}

/// Category lexicon from `path`, or the built-in table.
pub fn category_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    match path {
        Some(p) => parse_category_lexicon(&read(p)?, p),
        None => parse_category_lexicon(DEFAULT_CATEGORY_LEXICON, Path::new("<built-in>")),
    }
}

/// Style lexicons from `path`, or the built-in groups.
pub fn style_lexicons(path: Option<&Path>) -> Result<StyleLexicons> {
    match path {
        Some(p) => parse_style_lexicons(&read(p)?, p),
        None => parse_style_lexicons(DEFAULT_STYLE_LEXICONS, Path::new("<built-in>")),
    }
}

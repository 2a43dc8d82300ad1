// SPDX-License-Identifier: MIT OR Apache-2.0

//! Projection energy of residual vectors in a subspace and its
//! aggregations over token categories and basis directions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::analysis::tagging::{Lexicon, TokenCategory};
use crate::basis::OrthonormalBasis;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::steering::TokenEvent;

/// Energy of one vector in a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    /// `‖Uᵀr‖² / ‖r‖²`, computed as the sum of `per_direction`.
    pub total: f64,
    /// `(u_jᵀr)² / ‖r‖²`.
    pub per_direction: Vec<f64>,
    /// `(u_jᵀr)² / Σ_m (u_mᵀr)²`; all zeros when `r ⟂ span(U)`.
    pub subspace_normalized: Vec<f64>,
}

pub fn projection_energy(r: &[f64], basis: &OrthonormalBasis) -> Result<EnergyReport> {
    let coords = basis.coordinates(r)?;
    let norm_sq = dot(r, r);
    if !(norm_sq > 0.0) {
        return Err(Error::Degenerate(
            "projection energy of a zero vector".into(),
        ));
    }
    let squares: Vec<f64> = coords.iter().map(|c| c * c).collect();
    let per_direction: Vec<f64> = squares.iter().map(|s| s / norm_sq).collect();
    let total = per_direction.iter().sum();
    let inside: f64 = squares.iter().sum();
    let subspace_normalized = if inside > 0.0 {
        squares.iter().map(|s| s / inside).collect()
    } else {
        vec![0.0; squares.len()]
    };
    Ok(EnergyReport {
        total,
        per_direction,
        subspace_normalized,
    })
}

/// Mean projection energy over a chain of token vectors.
pub fn chain_energy(chain: &[Vec<f64>], basis: &OrthonormalBasis) -> Result<f64> {
    if chain.is_empty() {
        return Err(Error::Parameter("chain energy of an empty chain".into()));
    }
    let mut sum = 0.0;
    for r in chain {
        sum += projection_energy(r, basis)?.total;
    }
    Ok(sum / chain.len() as f64)
}

/// Mean energy over the generated positions of a (possibly steered) stream.
/// `vectors[i]` is the vector for `events[i]`.
pub fn generated_energy(
    events: &[TokenEvent],
    vectors: &[Vec<f64>],
    basis: &OrthonormalBasis,
) -> Result<f64> {
    if events.len() != vectors.len() {
        return Err(Error::Parameter(format!(
            "{} events but {} vectors",
            events.len(),
            vectors.len()
        )));
    }
    let chain: Vec<Vec<f64>> = events
        .iter()
        .zip(vectors)
        .filter(|(e, _)| e.generated)
        .map(|(_, v)| v.clone())
        .collect();
    chain_energy(&chain, basis)
}

/// Mean token energy per category. Untagged tokens are ignored and
/// categories without tokens are omitted.
pub fn category_energy<S: AsRef<str>>(
    tokens: &[(S, Vec<f64>)],
    basis: &OrthonormalBasis,
    lexicon: &Lexicon,
) -> Result<BTreeMap<TokenCategory, f64>> {
    if tokens.is_empty() {
        return Err(Error::Parameter("no tokens to aggregate".into()));
    }
    let mut sums: BTreeMap<TokenCategory, (f64, usize)> = BTreeMap::new();
    for (tok, r) in tokens {
        let cat = lexicon.tag(tok.as_ref());
        if cat == TokenCategory::Other {
            continue;
        }
        let e = projection_energy(r, basis)?.total;
        let slot = sums.entry(cat).or_insert((0.0, 0));
        slot.0 += e;
        slot.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(c, (s, n))| (c, s / n as f64))
        .collect())
}

/// Per-direction score used by [`direction_category_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Divide by the token's full squared norm.
    Global,
    /// Divide by the token's squared norm inside the subspace.
    Subspace,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Global => "global",
            Normalization::Subspace => "subspace",
        }
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(Normalization::Global),
            "subspace" => Ok(Normalization::Subspace),
            other => Err(Error::Parameter(format!(
                "unknown normalization {other:?}, expected global or subspace"
            ))),
        }
    }
}

/// Mean per-direction score for each (direction, category) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCategoryMatrix {
    /// Column labels: categories that had at least one token.
    pub categories: Vec<TokenCategory>,
    /// Tokens contributing to each column.
    pub counts: Vec<usize>,
    /// `k' × C` means.
    pub scores: Matrix,
}

impl DirectionCategoryMatrix {
    /// Row permutation grouping directions by their dominant category (in
    /// column order), strongest first within a group.
    pub fn dominant_order(&self) -> Vec<usize> {
        let c = self.scores.cols();
        let mut keyed: Vec<(usize, f64, usize)> = (0..self.scores.rows())
            .map(|j| {
                let row = self.scores.row(j);
                let mut best = 0;
                for i in 1..c {
                    if row[i] > row[best] {
                        best = i;
                    }
                }
                (best, if c == 0 { 0.0 } else { row[best] }, j)
            })
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        keyed.into_iter().map(|(_, _, j)| j).collect()
    }
}

pub fn direction_category_matrix<S: AsRef<str>>(
    tokens: &[(S, Vec<f64>)],
    basis: &OrthonormalBasis,
    lexicon: &Lexicon,
    normalization: Normalization,
) -> Result<DirectionCategoryMatrix> {
    if tokens.is_empty() {
        return Err(Error::Parameter("no tokens to aggregate".into()));
    }
    let k = basis.rank();
    let mut sums: BTreeMap<TokenCategory, (Vec<f64>, usize)> = BTreeMap::new();
    for (tok, r) in tokens {
        let cat = lexicon.tag(tok.as_ref());
        if cat == TokenCategory::Other {
            continue;
        }
        let report = projection_energy(r, basis)?;
        let scores = match normalization {
            Normalization::Global => &report.per_direction,
            Normalization::Subspace => &report.subspace_normalized,
        };
        let slot = sums.entry(cat).or_insert_with(|| (vec![0.0; k], 0));
        for (acc, s) in slot.0.iter_mut().zip(scores) {
            *acc += s;
        }
        slot.1 += 1;
    }
    let categories: Vec<TokenCategory> = sums.keys().copied().collect();
    let counts: Vec<usize> = sums.values().map(|(_, n)| *n).collect();
    let columns: Vec<Vec<f64>> = sums
        .into_values()
        .map(|(s, n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    let scores = if columns.is_empty() {
        Matrix::zeros(k, 0)
    } else {
        Matrix::from_columns(&columns)?
    };
    Ok(DirectionCategoryMatrix {
        categories,
        counts,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::tagging::Lexicon;

    fn basis() -> OrthonormalBasis {
        let u = Matrix::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        OrthonormalBasis::new(u, 1e-12).unwrap()
    }

    fn lex() -> Lexicon {
        Lexicon::from_lists(vec![
            (TokenCategory::Entity, vec!["polly"]),
            (TokenCategory::Structure, vec!["the"]),
        ])
        .unwrap()
    }

    #[test]
    fn basis_vector_and_orthogonal_and_half() {
        let e = projection_energy(&[1.0, 0.0, 0.0], &basis()).unwrap();
        assert_eq!(e.total, 1.0);
        assert_eq!(e.per_direction, vec![1.0, 0.0]);
        let o = projection_energy(&[0.0, 0.0, 2.0], &basis()).unwrap();
        assert_eq!(o.total, 0.0);
        assert_eq!(o.subspace_normalized, vec![0.0, 0.0]);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let h = projection_energy(&[s, 0.0, s], &basis()).unwrap();
        assert!((h.total - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        assert!(matches!(
            projection_energy(&[0.0; 3], &basis()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn category_means() {
        let tokens = vec![
            ("Polly", vec![0.0, 2.0, 0.0]),
            ("the", vec![0.0, 0.0, 1.0]),
            ("wumpus", vec![1.0, 0.0, 0.0]),
        ];
        let m = category_energy(&tokens, &basis(), &lex()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[&TokenCategory::Entity], 1.0);
        assert_eq!(m[&TokenCategory::Structure], 0.0);
        let empty: Vec<(&str, Vec<f64>)> = vec![];
        assert!(category_energy(&empty, &basis(), &lex()).is_err());
    }

    #[test]
    fn single_token_matrix() {
        let tokens = vec![("polly", vec![1.0, 0.0, 0.0])];
        let m =
            direction_category_matrix(&tokens, &basis(), &lex(), Normalization::Global).unwrap();
        assert_eq!(m.categories, vec![TokenCategory::Entity]);
        assert_eq!(m.scores.column(0), vec![1.0, 0.0]);
        assert!("local".parse::<Normalization>().is_err());
    }

    #[test]
    fn dominant_order_groups_rows() {
        let scores = Matrix::new(3, 2, vec![0.1, 0.9, 0.8, 0.2, 0.3, 0.4]).unwrap();
        let m = DirectionCategoryMatrix {
            categories: vec![TokenCategory::Entity, TokenCategory::Structure],
            counts: vec![1, 1],
            scores,
        };
        assert_eq!(m.dominant_order(), vec![1, 0, 2]);
    }

    #[test]
    fn chain_means() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let chain = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![s, s, 0.0],
            vec![0.0, 0.0, -3.0],
        ];
        assert!((chain_energy(&chain, &basis()).unwrap() - 0.5).abs() < 1e-15);
        assert!(chain_energy(&[], &basis()).is_err());
    }
}

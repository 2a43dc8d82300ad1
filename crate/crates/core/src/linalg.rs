// SPDX-License-Identifier: MIT OR Apache-2.0

//! Factorizations used by the subspace pipeline.
//!
//! QR is a hand-written Householder sweep that skips rank-deficient columns.
//! SVD and symmetric eigendecomposition delegate to `nalgebra` and return
//! results sorted by decreasing value with a deterministic sign convention.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};

/// Householder reflector `I - 2 v vᵀ / (vᵀv)` acting on entries `offset..`.
struct Reflector {
    v: Vec<f64>,
    vtv: f64,
    offset: usize,
}

impl Reflector {
    fn apply(&self, x: &mut [f64]) {
        let tail = &mut x[self.offset..];
        let s = 2.0 * dot(&self.v, tail) / self.vtv;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= s * v;
        }
    }
}

/// Thin QR factorization with column skipping.
///
/// Columns are processed left to right. A column whose residual after the
/// previously accepted reflectors has norm below `rank_tol * |R_11|` is
/// dropped instead of producing a reflector, so the returned `Q` spans
/// exactly the column space of the input. `|R_11|` is the residual norm of
/// the first non-zero column. Diagonal entries of `R` are made positive.
pub struct SkippingQr {
    pub q: Matrix,
    /// Indices of input columns that produced a basis vector.
    pub kept: Vec<usize>,
    /// Diagonal of `R` for the kept columns (all positive).
    pub r_diagonal: Vec<f64>,
}

impl SkippingQr {
    pub fn dropped(&self, input_cols: usize) -> usize {
        input_cols - self.kept.len()
    }
}

pub fn qr_skipping(w: &Matrix, rank_tol: f64) -> Result<SkippingQr> {
    let (d, k) = w.shape();
    if !(rank_tol >= 0.0) {
        return Err(Error::Parameter(format!(
            "rank_tol must be >= 0, got {rank_tol}"
        )));
    }
    let mut reflectors: Vec<Reflector> = Vec::with_capacity(k.min(d));
    let mut kept = Vec::new();
    let mut diag = Vec::new();
    let mut reference: Option<f64> = None;

    for j in 0..k {
        if reflectors.len() == d {
            break;
        }
        let mut x = w.column(j);
        for h in &reflectors {
            h.apply(&mut x);
        }
        let r = reflectors.len();
        let residual = &x[r..];
        let nrm = norm(residual);
        let threshold = rank_tol * reference.unwrap_or(nrm);
        if nrm == 0.0 || nrm < threshold {
            continue;
        }
        reference.get_or_insert(nrm);
        let alpha = if residual[0] >= 0.0 { -nrm } else { nrm };
        let mut v = residual.to_vec();
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        reflectors.push(Reflector { v, vtv, offset: r });
        kept.push(j);
        diag.push(alpha);
    }

    if reflectors.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {k} columns of the {d}x{k} matrix are zero"
        )));
    }

    let rank = reflectors.len();
    let mut columns = Vec::with_capacity(rank);
    for (i, alpha) in diag.iter_mut().enumerate() {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for h in reflectors.iter().rev() {
            h.apply(&mut e);
        }
        if *alpha < 0.0 {
            e.iter_mut().for_each(|v| *v = -*v);
            *alpha = -*alpha;
        }
        columns.push(e);
    }

    Ok(SkippingQr {
        q: Matrix::from_columns(&columns)?,
        kept,
        r_diagonal: diag,
    })
}

/// Flips `v` in place so its largest-magnitude entry is positive.
/// Returns whether a flip happened.
pub(crate) fn canonical_sign(v: &mut [f64]) -> bool {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if libm::fabs(x) > best {
            best = libm::fabs(x);
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

/// Thin SVD `M = U diag(s) Vᵀ` with singular values sorted descending.
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

pub fn svd(m: &Matrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter(format!(
            "cannot factor an empty {rows}x{cols} matrix"
        )));
    }
    let dm = m.to_dmatrix();
    let svd = dm.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Conditioning("SVD did not converge".into()));
    };
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut u_cols = Vec::with_capacity(order.len());
    let mut v_cols = Vec::with_capacity(order.len());
    let mut values = Vec::with_capacity(order.len());
    for &idx in &order {
        let mut uc: Vec<f64> = u.column(idx).iter().copied().collect();
        let mut vc: Vec<f64> = v_t.row(idx).iter().copied().collect();
        if canonical_sign(&mut vc) {
            uc.iter_mut().for_each(|x| *x = -*x);
        }
        u_cols.push(uc);
        v_cols.push(vc);
        values.push(s[idx]);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning(
            "SVD produced non-finite singular values".into(),
        ));
    }
    Ok(Svd {
        u: Matrix::from_columns(&u_cols)?,
        singular_values: values,
        v: Matrix::from_columns(&v_cols)?,
    })
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 {
        return Err(Error::Parameter(format!(
            "symmetric eigendecomposition needs a non-empty square matrix, got {rows}x{cols}"
        )));
    }
    let eig = m.to_dmatrix().symmetric_eigen();
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut cols_out = Vec::with_capacity(rows);
    let mut values = Vec::with_capacity(rows);
    for &idx in &order {
        let mut c: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        canonical_sign(&mut c);
        cols_out.push(c);
        values.push(eig.eigenvalues[idx]);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning(
            "eigendecomposition produced non-finite values".into(),
        ));
    }
    Ok(SymmetricEigen {
        values,
        vectors: Matrix::from_columns(&cols_out)?,
    })
}

/// `max |MᵀM - I|` over all entries.
pub fn orthonormality_error(m: &Matrix) -> f64 {
    let gram = m.tr_matmul(m).expect("Gram of a matrix with itself");
    let eye = Matrix::identity(m.cols());
    gram.max_abs_diff(&eye).unwrap_or(f64::INFINITY)
}

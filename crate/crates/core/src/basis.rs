// SPDX-License-Identifier: MIT OR Apache-2.0

//! Orthonormal basis `U` of a subspace and its projector `P = UUᵀ`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default tolerance used when validating `UᵀU = I`.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// A `D × k` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis(Matrix);

impl OrthonormalBasis {
    /// Validates `UᵀU = I` within `tol`.
    pub fn new(u: Matrix, tol: f64) -> Result<Self> {
        if u.cols() == 0 || u.cols() > u.rows() {
            return Err(Error::Validation(format!(
                "basis must be D x k with 1 <= k <= D, got {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let err = crate::linalg::orthonormality_error(&u);
        if !(err <= tol) {
            return Err(Error::Validation(format!(
                "columns are not orthonormal: max |UᵀU - I| = {err:e} > {tol:e}"
            )));
        }
        Ok(Self(u))
    }

    pub(crate) fn new_unchecked(u: Matrix) -> Self {
        Self(u)
    }

    /// Ambient dimension `D`.
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    /// Number of basis vectors `k'`.
    pub fn rank(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j)
    }

    /// Coordinates `Uᵀr` of `r` in the subspace.
    pub fn coordinates(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.check_len(r)?;
        self.0.tr_matvec(r)
    }

    /// `P r = U (Uᵀ r)`.
    pub fn project(&self, r: &[f64]) -> Result<Vec<f64>> {
        let c = self.coordinates(r)?;
        self.0.matvec(&c)
    }

    /// Dense `D × D` projector. Intended for small `D` and for tests.
    pub fn projector(&self) -> Matrix {
        self.0
            .matmul(&self.0.transpose())
            .expect("U Uᵀ is always conformable")
    }

    fn check_len(&self, r: &[f64]) -> Result<()> {
        if r.len() != self.dim() {
            return Err(Error::Parameter(format!(
                "vector of length {} does not match basis dimension {}",
                r.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

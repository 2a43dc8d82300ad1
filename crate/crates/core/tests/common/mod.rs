// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use logicspace_core::rng::GaussianSource;
use logicspace_core::Matrix;
use nalgebra::DMatrix;

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    GaussianSource::new(seed).matrix(rows, cols).unwrap()
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(m[(i, j)]);
        }
    }
    Matrix::new(m.nrows(), m.ncols(), data).unwrap()
}

/// Canonical correlations from the generalized eigenproblem
/// `Σxy Σyy⁻¹ Σyx a = ρ² Σxx a`, solved as the spectrum of
/// `Σxx⁻¹ Σxy Σyy⁻¹ Σyx` on column-centred data. No whitening, no SVD.
pub fn cca_oracle(x: &Matrix, y: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    let center = |m: &DMatrix<f64>| {
        let mut c = m.clone();
        for j in 0..c.ncols() {
            let mu = c.column(j).sum() / n;
            for i in 0..c.nrows() {
                c[(i, j)] -= mu;
            }
        }
        c
    };
    let xc = center(&to_na(x));
    let yc = center(&to_na(y));
    let sxx = xc.transpose() * &xc / (n - 1.0);
    let syy = yc.transpose() * &yc / (n - 1.0);
    let sxy = xc.transpose() * &yc / (n - 1.0);
    let m = sxx.try_inverse().unwrap() * &sxy * syy.try_inverse().unwrap() * sxy.transpose();
    let mut rho: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .map(|c| c.re.max(0.0).sqrt())
        .collect();
    rho.sort_by(|a, b| b.total_cmp(a));
    rho.truncate(x.cols().min(y.cols()));
    rho
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

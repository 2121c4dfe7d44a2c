//! Thin wrappers over the dense Hermitian kernels.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub fn mul(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    a * b
}

/// a* b
pub fn adj_mul(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    a.adjoint() * b
}

pub fn hermitize(m: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
}

/// Eigenvalues ascending and eigenvectors by column of the Hermitian part of m.
pub fn eigh(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    if m.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let h = hermitize(m);
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Dense)?;
    let s = evd.S().column_vector();
    let values = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn eigvalsh(m: &Mat<C64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let h = hermitize(m);
    let v = h.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Dense)?;
    Ok(v)
}

pub fn columns(m: &Mat<C64>, cols: &[usize]) -> Mat<C64> {
    Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn hstack(parts: &[&Mat<C64>]) -> Mat<C64> {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let total: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = Mat::<C64>::zeros(rows, total);
    let mut at = 0;
    for p in parts {
        for j in 0..p.ncols() {
            out.col_as_slice_mut(at + j).copy_from_slice(p.col_as_slice(j));
        }
        at += p.ncols();
    }
    out
}

pub fn rows(m: &Mat<C64>, start: usize, count: usize) -> Mat<C64> {
    Mat::from_fn(count, m.ncols(), |i, j| m[(start + i, j)])
}

/// Column-orthonormal basis of span(s) by symmetric eigen-orthogonalization,
/// dropping directions with Gram eigenvalue below `drop` times the largest.
/// Returns the transform T with s·T orthonormal.
pub fn svqb(s: &Mat<C64>, drop: f64) -> Result<Mat<C64>> {
    let k = s.ncols();
    if k == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let g = adj_mul(s, s);
    let d: Vec<f64> = (0..k)
        .map(|i| {
            let v = g[(i, i)].re;
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let scaled = Mat::from_fn(k, k, |i, j| g[(i, j)] * d[i] * d[j]);
    let (theta, v) = eigh(&scaled)?;
    let top = theta.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..k).filter(|&i| theta[i] > drop * top).collect();
    Ok(Mat::from_fn(k, keep.len(), |i, j| {
        v[(i, keep[j])] * (d[i] / theta[keep[j]].sqrt())
    }))
}

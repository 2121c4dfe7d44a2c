//! Blocked locally optimal preconditioned conjugate gradient for the lowest
//! eigenpairs of a Hermitian positive semidefinite operator.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{adj_mul, columns, eigh, hstack, mul, rows, svqb};
use super::{LinearOperator, SpectralSlice};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LobpcgOptions {
    pub count: usize,
    /// Guard columns carried along but not required to converge.
    pub guard: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self {
            count: 1,
            guard: 8,
            tol: 1e-9,
            max_iter: 2000,
            seed: 7,
        }
    }
}

fn apply_block(op: &dyn LinearOperator, x: &Mat<C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let y = op.apply(x.col_as_slice(j));
        out.col_as_slice_mut(j).copy_from_slice(&y);
    }
    out
}

fn sub_assign(a: &mut Mat<C64>, b: &Mat<C64>) {
    for j in 0..a.ncols() {
        let bc = b.col_as_slice(j);
        for (x, y) in a.col_as_slice_mut(j).iter_mut().zip(bc) {
            *x -= y;
        }
    }
}

fn col_norm(m: &Mat<C64>, j: usize) -> f64 {
    m.col_as_slice(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residuals(x: &Mat<C64>, ax: &Mat<C64>, lambda: &[f64]) -> (Mat<C64>, Vec<f64>) {
    let mut r = ax.clone();
    for j in 0..x.ncols() {
        let l = lambda[j];
        let xc = x.col_as_slice(j);
        for (v, xv) in r.col_as_slice_mut(j).iter_mut().zip(xc) {
            *v -= xv * l;
        }
    }
    let norms = (0..r.ncols()).map(|j| col_norm(&r, j)).collect();
    (r, norms)
}

/// Removes the span of the orthonormal `q` from `s` (and the matching images).
fn deflate(s: &mut Mat<C64>, as_: Option<&mut Mat<C64>>, q: &Mat<C64>, aq: Option<&Mat<C64>>) {
    let c = adj_mul(q, s);
    sub_assign(s, &mul(q, &c));
    if let (Some(a), Some(aq)) = (as_, aq) {
        sub_assign(a, &mul(aq, &c));
    }
}

// Gram eigenvalues below this fraction of the largest are discarded.
const DROP: f64 = 1e-10;

fn gram_defect(q: &Mat<C64>) -> f64 {
    let g = adj_mul(q, q);
    let mut worst: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Two passes of eigen-orthogonalization, dropping dependent directions.
fn orthonormalize(s: &Mat<C64>) -> Result<Mat<C64>> {
    let t = svqb(s, DROP)?;
    let s = mul(s, &t);
    let t = svqb(&s, DROP)?;
    Ok(mul(&s, &t))
}

fn orthonormal_start(dim: usize, cols: usize, seed: u64) -> Result<Mat<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Mat::from_fn(dim, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    orthonormalize(&x)
}

pub fn lobpcg(
    op: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    opts: &LobpcgOptions,
) -> Result<SpectralSlice> {
    let dim = op.dim();
    let want = opts.count;
    if want == 0 {
        return Ok(SpectralSlice::empty(dim, opts.tol));
    }
    let block = (want + opts.guard).min(dim);
    let mut x = orthonormal_start(dim, block, opts.seed)?;
    let mut ax = apply_block(op, &x);
    let (lambda0, y) = eigh(&adj_mul(&x, &ax))?;
    x = mul(&x, &y);
    ax = mul(&ax, &y);
    let mut lambda = lambda0;
    let mut p: Option<(Mat<C64>, Mat<C64>)> = None;
    let mut worst = f64::INFINITY;

    for iter in 0..opts.max_iter {
        // Refresh the tracked images now and then to stop drift.
        if iter % 25 == 24 {
            x = orthonormalize(&x)?;
            ax = apply_block(op, &x);
            let (l, y) = eigh(&adj_mul(&x, &ax))?;
            x = mul(&x, &y);
            ax = mul(&ax, &y);
            lambda = l;
            p = None;
        }
        let (r, norms) = residuals(&x, &ax, &lambda);
        let limit = |j: usize| opts.tol * lambda[j].abs().max(1.0);
        worst = (0..want).map(|j| norms[j] / limit(j)).fold(0.0, f64::max);
        if worst <= 1.0 {
            // Confirm with exact images before returning.
            let exact = apply_block(op, &x);
            let (_, exact_norms) = residuals(&x, &exact, &lambda);
            if (0..want).all(|j| exact_norms[j] <= limit(j)) {
                return Ok(SpectralSlice {
                    values: lambda[..want].to_vec(),
                    vectors: columns(&x, &(0..want).collect::<Vec<_>>()),
                    residuals: exact_norms[..want].to_vec(),
                    iterations: iter,
                    tol: opts.tol,
                });
            }
            ax = exact;
            continue;
        }
        let active: Vec<usize> = (0..block)
            .filter(|&j| j >= want || norms[j] > 0.1 * limit(j))
            .collect();
        let mut w = columns(&r, &active);
        if let Some(t) = precond {
            w = apply_block(t, &w);
        }
        let mut w = w;
        for _ in 0..2 {
            deflate(&mut w, None, &x, None);
            deflate(&mut w, None, &x, None);
            w = orthonormalize(&w)?;
        }
        let aw = apply_block(op, &w);

        let mut basis: Vec<Mat<C64>> = vec![x.clone(), w.clone()];
        let mut images: Vec<Mat<C64>> = vec![ax.clone(), aw.clone()];
        if let Some((mut pp, mut ap)) = p.take() {
            for _ in 0..2 {
                deflate(&mut pp, Some(&mut ap), &x, Some(&ax));
                deflate(&mut pp, Some(&mut ap), &w, Some(&aw));
            }
            let t = svqb(&pp, DROP)?;
            if t.ncols() > 0 {
                let pp = mul(&pp, &t);
                let ap = mul(&ap, &t);
                let trial = hstack(&[&x, &w, &pp]);
                // Keep P only while the joint basis stays orthonormal.
                if gram_defect(&trial) < 1e-8 {
                    basis.push(pp);
                    images.push(ap);
                }
            }
        }
        let brefs: Vec<&Mat<C64>> = basis.iter().collect();
        let irefs: Vec<&Mat<C64>> = images.iter().collect();
        let q = hstack(&brefs);
        let aq = hstack(&irefs);
        let (theta, c) = eigh(&adj_mul(&q, &aq))?;
        let c = columns(&c, &(0..block).collect::<Vec<_>>());
        let x_new = mul(&q, &c);
        let ax_new = mul(&aq, &c);
        // Search direction: the part of the update outside the old X.
        let tail = rows(&c, block, c.nrows() - block);
        let qt = columns(&q, &(block..q.ncols()).collect::<Vec<_>>());
        let aqt = columns(&aq, &(block..aq.ncols()).collect::<Vec<_>>());
        p = Some((mul(&qt, &tail), mul(&aqt, &tail)));
        x = x_new;
        ax = ax_new;
        lambda = theta[..block].to_vec();
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: worst,
    })
}

//! Lowest eigenpairs of Δ''_k, the space ℋ_k they span, the gap certificate,
//! the orthogonal splitting s = s_h + s_nh and the Green operator of P_k.
//!
//! Eigenvectors are stored Euclidean-normalized by column. The L² pairing of
//! fields of one bidegree is a constant multiple of the Euclidean one, so the
//! two notions of orthogonality agree and only norms need rescaling.

pub mod dense;
mod lobpcg;

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use lobpcg::{lobpcg, LobpcgOptions};

use crate::cohomology::b2;
use crate::error::{Error, Result};
use crate::geometry::{dot, norm_sqr, TorusGeometry};
use crate::operators::{CovariantOps, OperatorHandle, SectionField};

/// Anything that maps flat arrays to flat arrays linearly.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
}

impl LinearOperator for OperatorHandle {
    fn dim(&self) -> usize {
        self.source_dim()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        OperatorHandle::apply(self, x)
    }
}

/// A dense matrix seen as an operator.
impl LinearOperator for Mat<C64> {
    fn dim(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nrows()];
        for j in 0..self.ncols() {
            let xj = x[j];
            if xj != C64::new(0.0, 0.0) {
                for (o, a) in out.iter_mut().zip(self.col_as_slice(j)) {
                    *o += a * xj;
                }
            }
        }
        out
    }
}

/// Symmetric product of per-axis line inverses (σ − ½D_a²)^{-1}, with the
/// outer factors halved in power so the whole is Hermitian positive definite:
/// S₀^{½}…S_{m−1}^{½} S_m S_{m−1}^{½}…S₀^{½}. Each factor is exact in the
/// parallel frame of its lines, so the preconditioner is gauge covariant.
pub struct LinePreconditioner {
    ops: Arc<CovariantOps>,
    sigma: f64,
    dim: usize,
}

impl LinePreconditioner {
    pub fn new(ops: Arc<CovariantOps>, components: usize, sigma: f64) -> Self {
        let dim = components * ops.geometry().sites();
        Self { ops, sigma, dim }
    }
}

impl LinearOperator for LinePreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let sigma = self.sigma;
        let half = move |xi: f64| (sigma + 0.5 * xi * xi).powf(-0.5);
        let full = move |xi: f64| 1.0 / (sigma + 0.5 * xi * xi);
        let axes = self.ops.geometry().axes();
        let sites = self.ops.geometry().sites();
        let mut out = x.to_vec();
        for comp in out.chunks_mut(sites) {
            for a in 0..axes - 1 {
                self.ops.line_filter(a, comp, &half);
            }
            self.ops.line_filter(axes - 1, comp, &full);
            for a in (0..axes - 1).rev() {
                self.ops.line_filter(a, comp, &half);
            }
        }
        out
    }
}

/// Ascending eigenvalues with Euclidean-orthonormal eigenvectors by column.
#[derive(Clone, Debug)]
pub struct SpectralSlice {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub tol: f64,
}

impl SpectralSlice {
    pub fn empty(dim: usize, tol: f64) -> Self {
        Self {
            values: Vec::new(),
            vectors: Mat::zeros(dim, 0),
            residuals: Vec::new(),
            iterations: 0,
            tol,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> &[C64] {
        self.vectors.col_as_slice(j)
    }

    /// Largest ‖Ae − μe‖ / max(1, μ) over the slice.
    pub fn worst_relative_residual(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.residuals)
            .map(|(v, r)| r / v.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

/// The `count` smallest eigenpairs of a Hermitian positive semidefinite handle.
pub fn lowest_eigenpairs(op: &OperatorHandle, count: usize, tol: f64) -> Result<SpectralSlice> {
    let components = op.source_dim() / op.ops().geometry().sites();
    // Tuned on N ∈ {12, 16, 64}: the optimum tracks the grid linearly.
    let sigma = 8.0 * std::f64::consts::PI * op.ops().geometry().grid() as f64;
    let pre = LinePreconditioner::new(op.ops_arc(), components, sigma);
    let opts = LobpcgOptions {
        count,
        tol,
        ..LobpcgOptions::default()
    };
    lobpcg(op, Some(&pre), &opts)
}

/// Full dense diagonalization; the oracle for small grids.
pub fn dense_eigenpairs(op: &OperatorHandle) -> Result<SpectralSlice> {
    let a = op.assemble();
    let (values, vectors) = dense::eigh(&a)?;
    let residuals = (0..values.len())
        .map(|j| {
            let x = vectors.col_as_slice(j);
            let ax = LinearOperator::apply(op, x);
            ax.iter()
                .zip(x)
                .map(|(y, v)| (y - v * values[j]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(SpectralSlice {
        values,
        vectors,
        residuals,
        iterations: 0,
        tol: 0.0,
    })
}

/// Eigenvalues only, densely.
pub fn dense_eigenvalues(op: &OperatorHandle) -> Result<Vec<f64>> {
    dense::eigvalsh(&op.assemble())
}

/// The approximately holomorphic space: every eigenvector with μ ≤ C/k^{1+ε}.
#[derive(Clone, Debug)]
pub struct HkBasis {
    pub k: u64,
    pub threshold: f64,
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
    geom: TorusGeometry,
}

pub fn threshold(k: u64, c: f64, eps: f64) -> f64 {
    c / (k as f64).powf(1.0 + eps)
}

pub fn build_hk(
    slice: &SpectralSlice,
    geom: &TorusGeometry,
    k: u64,
    c: f64,
    eps: f64,
) -> Result<HkBasis> {
    let limit = 2.0 / b2(geom.n()) as f64;
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::Config(format!("ε = {eps} must lie in (0, {limit})")));
    }
    let t = threshold(k, c, eps);
    let largest = slice.values.last().copied().unwrap_or(f64::NEG_INFINITY);
    if largest <= t {
        return Err(Error::SliceTooShort {
            largest,
            threshold: t,
        });
    }
    let keep: Vec<usize> = (0..slice.len()).filter(|&j| slice.values[j] <= t).collect();
    Ok(HkBasis {
        k,
        threshold: t,
        values: keep.iter().map(|&j| slice.values[j]).collect(),
        vectors: dense::columns(&slice.vectors, &keep),
        geom: geom.clone(),
    })
}

impl HkBasis {
    /// Wraps explicit Euclidean-orthonormal vectors.
    pub fn from_vectors(geom: &TorusGeometry, k: u64, threshold: f64, values: Vec<f64>, vectors: Mat<C64>) -> Self {
        Self {
            k,
            threshold,
            values,
            vectors,
            geom: geom.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    /// Basis element j as an L²-normalized section.
    pub fn section(&self, j: usize) -> SectionField {
        let scale = 1.0 / self.geom.cell().sqrt();
        let data = self.vectors.col_as_slice(j).iter().map(|v| v * scale).collect();
        SectionField::scalar(&self.geom, data).expect("basis lives on its geometry")
    }

    /// All basis elements as L²-normalized sections.
    pub fn sections(&self) -> Vec<SectionField> {
        (0..self.dim()).map(|j| self.section(j)).collect()
    }

    /// Coefficients ⟨e_j, s⟩ in the L² normalization.
    pub fn coefficients(&self, s: &SectionField) -> Vec<C64> {
        let scale = self.geom.cell().sqrt();
        (0..self.dim())
            .map(|j| dot(self.vectors.col_as_slice(j), s.data()) * scale)
            .collect()
    }
}

/// Outcome of the spectral-gap check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapVerdict {
    pub pass: bool,
    pub dim: usize,
    pub threshold: f64,
    /// Upper end (δ₀ − ε₀)k·g_disc of the forbidden interval.
    pub upper: f64,
    pub first_above: Option<f64>,
    /// μ_{N_k+1} / μ_{N_k}
    pub gap_ratio: f64,
    pub offender: Option<f64>,
}

/// No computed eigenvalue may lie in (C/k^{1+ε}, (δ₀ − ε₀)k·g_disc].
pub fn spectral_gap_certificate(
    slice: &SpectralSlice,
    k: u64,
    delta0: f64,
    eps0: f64,
    c: f64,
    eps: f64,
    g_disc: f64,
) -> GapVerdict {
    let t = threshold(k, c, eps);
    let upper = (delta0 - eps0) * k as f64 * g_disc;
    let offender = slice.values.iter().copied().find(|&v| v > t && v <= upper);
    let dim = slice.values.iter().filter(|&&v| v <= t).count();
    let first_above = slice.values.get(dim).copied();
    let gap_ratio = match (dim, first_above) {
        (0, _) | (_, None) => f64::NAN,
        (d, Some(f)) => f / slice.values[d - 1].abs().max(f64::MIN_POSITIVE),
    };
    GapVerdict {
        pass: offender.is_none() && first_above.is_some(),
        dim,
        threshold: t,
        upper,
        first_above,
        gap_ratio,
        offender,
    }
}

/// s = s_h + s_nh with s_h the L²-orthogonal projection onto ℋ_k.
pub fn project(s: &SectionField, basis: &HkBasis) -> (SectionField, SectionField) {
    let mut h = vec![C64::new(0.0, 0.0); s.data().len()];
    for j in 0..basis.dim() {
        let e = basis.vectors.col_as_slice(j);
        let c = dot(e, s.data());
        for (o, v) in h.iter_mut().zip(e) {
            *o += c * v;
        }
    }
    let sh = s.like(h);
    let snh = s.sub(&sh);
    (sh, snh)
}

/// P_k s = Δ''s − Σ_{ℋ_k} μ_j ⟨e_j, s⟩ e_j.
pub fn p_k(op: &OperatorHandle, basis: &HkBasis, s: &SectionField) -> SectionField {
    let mut out = LinearOperator::apply(op, s.data());
    for j in 0..basis.dim() {
        let e = basis.vectors.col_as_slice(j);
        let c = dot(e, s.data()) * basis.values[j];
        for (o, v) in out.iter_mut().zip(e) {
            *o -= c * v;
        }
    }
    s.like(out)
}

/// The Green operator of P_k: inverse on the complement of ℋ_k, zero on ℋ_k.
pub enum Green {
    /// Full eigendecomposition; the complement is every eigenvector past dim ℋ_k.
    Dense { slice: SpectralSlice, kept: usize },
    /// Conjugate gradient on the complement, deflating ℋ_k.
    Iterative {
        op: OperatorHandle,
        basis: HkBasis,
        tol: f64,
        max_iter: usize,
    },
}

impl Green {
    pub fn dense(op: &OperatorHandle, basis: &HkBasis) -> Result<Self> {
        Ok(Green::Dense {
            slice: dense_eigenpairs(op)?,
            kept: basis.dim(),
        })
    }

    pub fn iterative(op: &OperatorHandle, basis: &HkBasis, tol: f64) -> Self {
        Green::Iterative {
            op: op.clone(),
            basis: basis.clone(),
            tol,
            max_iter: 5000,
        }
    }

    pub fn apply(&self, rhs: &SectionField) -> Result<SectionField> {
        match self {
            Green::Dense { slice, kept } => {
                let mut out = vec![C64::new(0.0, 0.0); rhs.data().len()];
                for j in *kept..slice.len() {
                    let e = slice.vector(j);
                    let c = dot(e, rhs.data()) / slice.values[j];
                    for (o, v) in out.iter_mut().zip(e) {
                        *o += c * v;
                    }
                }
                Ok(rhs.like(out))
            }
            Green::Iterative {
                op,
                basis,
                tol,
                max_iter,
            } => {
                let (_, b) = project(rhs, basis);
                let x = deflated_cg(op, basis, b.data(), *tol, *max_iter)?;
                Ok(rhs.like(x))
            }
        }
    }
}

fn deflate_in_place(basis: &HkBasis, v: &mut [C64]) {
    for j in 0..basis.dim() {
        let e = basis.vectors.col_as_slice(j);
        let c = dot(e, v);
        for (o, x) in v.iter_mut().zip(e) {
            *o -= c * x;
        }
    }
}

/// Solves Δ''x = b for x ⊥ ℋ_k with b ⊥ ℋ_k.
fn deflated_cg(
    op: &OperatorHandle,
    basis: &HkBasis,
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<C64>> {
    let bnorm = norm_sqr(b).sqrt();
    let mut x = vec![C64::new(0.0, 0.0); b.len()];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = norm_sqr(&r);
    for iter in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            deflate_in_place(basis, &mut x);
            return Ok(x);
        }
        let mut ap = LinearOperator::apply(op, &p);
        deflate_in_place(basis, &mut ap);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 {
            return Err(Error::Breakdown(iter));
        }
        let a = rr / pap;
        for i in 0..x.len() {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_new = norm_sqr(&r);
        let beta = rr_new / rr;
        for i in 0..p.len() {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::Breakdown(max_iter))
}

/// (n!/k^n)·dim ℋ_k along S against ∫α^n.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub ks: Vec<u64>,
    pub normalized: Vec<f64>,
    pub target: f64,
    pub running_min: Vec<f64>,
    pub running_max: Vec<f64>,
}

impl GrowthReport {
    /// Relative deviation |value/target − 1| at each k.
    pub fn deviations(&self) -> Vec<f64> {
        self.normalized.iter().map(|v| (v / self.target - 1.0).abs()).collect()
    }
}

/// Normalizes dim ℋ_k by n!/k^n. For a constant form with periods c,
/// ∫α^n = n!·Pf(c), which is the target.
pub fn dimension_asymptotics(n: usize, dims: &[(u64, usize)], pfaffian: f64) -> GrowthReport {
    let fact = if n == 1 { 1.0 } else { 2.0 };
    let ks: Vec<u64> = dims.iter().map(|d| d.0).collect();
    let normalized: Vec<f64> = dims
        .iter()
        .map(|&(k, d)| fact * d as f64 / (k as f64).powi(n as i32))
        .collect();
    let mut running_min = Vec::with_capacity(normalized.len());
    let mut running_max = Vec::with_capacity(normalized.len());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &normalized {
        lo = lo.min(v);
        hi = hi.max(v);
        running_min.push(lo);
        running_max.push(hi);
    }
    GrowthReport {
        ks,
        normalized,
        target: fact * pfaffian,
        running_min,
        running_max,
    }
}

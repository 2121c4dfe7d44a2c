//! ∂̄_k, ∂_k, their adjoints and the Laplacians built from them.
//!
//! A (p, q)-form Σ f_{IJ} dz_I ∧ dz̄_J has pointwise norm 2^{p+q} Σ |f_{IJ}|²,
//! since |dz|² = |dz̄|² = 2 for the Euclidean metric. Adjoints are literal
//! transposes of the line derivatives, so every adjoint identity is exact.

mod covariant;
mod field;

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

pub use covariant::CovariantOps;
pub use field::{random_gauge, SectionField};

use crate::error::{Error, Result};
use crate::geometry::{HermitianForm, TorusGeometry};

const PI: f64 = std::f64::consts::PI;

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn add_scaled(out: &mut [C64], a: C64, x: &[C64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

fn blocks(geom: &TorusGeometry, p: usize) -> usize {
    if p == 0 {
        1
    } else {
        geom.n()
    }
}

/// ∂̄_k on (p, q)-forms, q ≤ 1.
pub fn dbar(ops: &CovariantOps, f: &SectionField) -> Result<SectionField> {
    let geom = ops.geometry();
    let (p, q) = f.bidegree();
    let n = geom.n();
    let s = sign(p);
    let mut out = SectionField::zeros(geom, p, q + 1);
    match q {
        0 => {
            for i in 0..blocks(geom, p) {
                for l in 0..n {
                    let d = ops.dbar_j(l, f.component(i));
                    add_scaled(out.component_mut(i * n + l), C64::new(s, 0.0), &d);
                }
            }
        }
        1 => {
            if n == 2 {
                for i in 0..blocks(geom, p) {
                    let a = ops.dbar_j(0, f.component(i * 2 + 1));
                    let b = ops.dbar_j(1, f.component(i * 2));
                    let dst = out.component_mut(i);
                    add_scaled(dst, C64::new(s, 0.0), &a);
                    add_scaled(dst, C64::new(-s, 0.0), &b);
                }
            }
        }
        _ => return Err(Error::Degree(q)),
    }
    Ok(out)
}

/// Exact adjoint of [`dbar`].
pub fn dbar_adjoint(ops: &CovariantOps, u: &SectionField) -> Result<SectionField> {
    let geom = ops.geometry();
    let (p, q) = u.bidegree();
    let n = geom.n();
    let s = sign(p);
    if q == 0 {
        return Err(Error::Degree(q));
    }
    let mut out = SectionField::zeros(geom, p, q - 1);
    match q {
        1 => {
            for i in 0..blocks(geom, p) {
                for l in 0..n {
                    let d = ops.del_j(l, u.component(i * n + l));
                    add_scaled(out.component_mut(i), C64::new(-2.0 * s, 0.0), &d);
                }
            }
        }
        2 => {
            for i in 0..blocks(geom, p) {
                let w = u.component(i);
                let d1 = ops.del_j(0, w);
                let d2 = ops.del_j(1, w);
                add_scaled(out.component_mut(i * 2 + 1), C64::new(-2.0 * s, 0.0), &d1);
                add_scaled(out.component_mut(i * 2), C64::new(2.0 * s, 0.0), &d2);
            }
        }
        _ => return Err(Error::Degree(q)),
    }
    Ok(out)
}

/// ∂_k from (0, q)- to (1, q)-forms.
pub fn del(ops: &CovariantOps, f: &SectionField) -> Result<SectionField> {
    let geom = ops.geometry();
    let (p, q) = f.bidegree();
    if p != 0 {
        return Err(Error::Degree(q));
    }
    let n = geom.n();
    let width = f.components();
    let mut out = SectionField::zeros(geom, 1, q);
    for j in 0..n {
        for c in 0..width {
            let d = ops.del_j(j, f.component(c));
            out.component_mut(j * width + c).copy_from_slice(&d);
        }
    }
    Ok(out)
}

/// Exact adjoint of [`del`].
pub fn del_adjoint(ops: &CovariantOps, v: &SectionField) -> Result<SectionField> {
    let geom = ops.geometry();
    let (p, q) = v.bidegree();
    if p != 1 {
        return Err(Error::Degree(q));
    }
    let n = geom.n();
    let mut out = SectionField::zeros(geom, 0, q);
    let width = out.components();
    for j in 0..n {
        for c in 0..width {
            let d = ops.dbar_j(j, v.component(j * width + c));
            add_scaled(out.component_mut(c), C64::new(-2.0, 0.0), &d);
        }
    }
    Ok(out)
}

/// Δ'' = ∂̄*∂̄ on functions and ∂̄∂̄* + ∂̄*∂̄ on (0,1)-forms.
pub fn laplacian(ops: &CovariantOps, u: &SectionField) -> Result<SectionField> {
    match u.bidegree() {
        (0, 0) => dbar_adjoint(ops, &dbar(ops, u)?),
        (0, 1) => {
            let mut a = dbar(ops, &dbar_adjoint(ops, u)?)?;
            if ops.geometry().n() == 2 {
                a.axpy(C64::new(1.0, 0.0), &dbar_adjoint(ops, &dbar(ops, u)?)?);
            }
            Ok(a)
        }
        (_, q) => Err(Error::Degree(q)),
    }
}

/// The rough Laplacian □'' acting on each dz̄_j coefficient separately as ∂̄*∂̄.
pub fn rough_laplacian(ops: &CovariantOps, u: &SectionField) -> Result<SectionField> {
    if u.bidegree() != (0, 1) {
        return Err(Error::Degree(u.q()));
    }
    let geom = ops.geometry();
    let mut out = SectionField::zeros(geom, 0, 1);
    for c in 0..geom.n() {
        let f = SectionField::scalar(geom, u.component(c).to_vec())?;
        let lf = laplacian(ops, &f)?;
        out.component_mut(c).copy_from_slice(lf.data());
    }
    Ok(out)
}

/// Zero-order curvature term on (0,1)-forms: (Mu)_j = 2π Σ_l conj(H)_{jl} u_l.
pub fn curvature_action(h: &HermitianForm, u: &SectionField) -> SectionField {
    let n = h.n();
    let mut out = u.like(vec![C64::new(0.0, 0.0); u.data().len()]);
    for j in 0..n {
        for l in 0..n {
            let a = 2.0 * PI * h.get(j, l).conj();
            let src = u.component(l).to_vec();
            add_scaled(out.component_mut(j), a, &src);
        }
    }
    out
}

/// Curvature of the flat metric on Λ^{0,1}: identically zero, kept as a literal operator.
pub fn metric_curvature(u: &SectionField) -> SectionField {
    u.like(vec![C64::new(0.0, 0.0); u.data().len()])
}

/// Δ''u − □''u − kVu − R_{α,k}u − Ru on (0,1)-forms, with kV = 2π k conj(H_α)
/// and R_{α,k} = 2π conj(H_k − kH_α) for the (1,1) part H_k of α_k.
pub fn weitzenboeck_residual(
    ops: &CovariantOps,
    u: &SectionField,
    alpha: &HermitianForm,
    alpha_k11: &HermitianForm,
    k: f64,
) -> Result<SectionField> {
    let mut r = laplacian(ops, u)?;
    r.axpy(C64::new(-1.0, 0.0), &rough_laplacian(ops, u)?);
    let kv = alpha.scale(k);
    r.axpy(C64::new(-1.0, 0.0), &curvature_action(&kv, u));
    r.axpy(
        C64::new(-1.0, 0.0),
        &curvature_action(&alpha_k11.sub(&kv), u),
    );
    r.axpy(C64::new(-1.0, 0.0), &metric_curvature(u));
    Ok(r)
}

/// ∂̄_k(∂̄_k s) + 2πi α_k^{0,2} ∧ s on functions.
pub fn dbar_square_residual(ops: &CovariantOps, s: &SectionField, a02: C64) -> Result<SectionField> {
    let mut r = dbar(ops, &dbar(ops, s)?)?;
    if r.components() > 0 {
        let term = s.data().iter().map(|v| C64::new(0.0, 2.0 * PI) * a02 * v).collect::<Vec<_>>();
        add_scaled(r.component_mut(0), C64::new(1.0, 0.0), &term);
    }
    Ok(r)
}

/// (∂_k∂̄_k + ∂̄_k∂_k)s + 2πi α_k^{1,1} ∧ s on functions, as dz_j∧dz̄_l coefficients.
pub fn mixed_residual(ops: &CovariantOps, s: &SectionField, h11: &HermitianForm) -> Result<SectionField> {
    let mut r = del(ops, &dbar(ops, s)?)?;
    r.axpy(C64::new(1.0, 0.0), &dbar(ops, &del(ops, s)?)?);
    let n = ops.geometry().n();
    for j in 0..n {
        for l in 0..n {
            // 2πi · (i/2) H_jl = −π H_jl
            let a = -PI * h11.get(j, l);
            add_scaled(r.component_mut(j * n + l), a, s.data());
        }
    }
    Ok(r)
}

/// ∂̄_k* ∂̄_k² s, the commutation defect.
pub fn commutation_defect(ops: &CovariantOps, s: &SectionField) -> Result<SectionField> {
    dbar_adjoint(ops, &dbar(ops, &dbar(ops, s)?)?)
}

/// ∂̄_k*² ∂̄_k (∂̄_k s).
pub fn second_defect(ops: &CovariantOps, s: &SectionField) -> Result<SectionField> {
    dbar_adjoint(ops, &commutation_defect(ops, s)?)
}

/// Noise low-passed along every axis by the covariant line filter
/// e^{−ξ²/(2κ²)}: a smooth global section (or form) whose content sits at
/// momenta of order κ, independent of the grid.
pub fn band_limited_noise(ops: &CovariantOps, p: usize, q: usize, kappa: f64, seed: u64) -> SectionField {
    let geom = ops.geometry();
    let mut f = SectionField::noise(geom, p, q, seed);
    let g = |xi: f64| (-0.5 * (xi / kappa).powi(2)).exp();
    for c in 0..f.components() {
        for axis in 0..geom.axes() {
            ops.line_filter(axis, f.component_mut(c), &g);
        }
    }
    f
}

/// Kinds of operator exposed to the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Dbar,
    DbarAdjoint,
    Del,
    DelAdjoint,
    LaplacianQ0,
    LaplacianQ1,
    BoxQ1,
}

impl OperatorKind {
    fn source(self) -> (usize, usize) {
        match self {
            OperatorKind::Dbar | OperatorKind::Del | OperatorKind::LaplacianQ0 => (0, 0),
            OperatorKind::DbarAdjoint | OperatorKind::LaplacianQ1 | OperatorKind::BoxQ1 => (0, 1),
            OperatorKind::DelAdjoint => (1, 0),
        }
    }
}

/// A matrix-free operator on flattened section arrays.
#[derive(Clone, Debug)]
pub struct OperatorHandle {
    kind: OperatorKind,
    ops: Arc<CovariantOps>,
}

impl OperatorHandle {
    pub fn new(kind: OperatorKind, ops: Arc<CovariantOps>) -> Self {
        Self { kind, ops }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn ops(&self) -> &CovariantOps {
        &self.ops
    }

    pub fn ops_arc(&self) -> Arc<CovariantOps> {
        Arc::clone(&self.ops)
    }

    pub fn source_dim(&self) -> usize {
        let (p, q) = self.kind.source();
        SectionField::zeros(self.ops.geometry(), p, q).data().len()
    }

    pub fn apply_field(&self, f: &SectionField) -> Result<SectionField> {
        let ops = &self.ops;
        match self.kind {
            OperatorKind::Dbar => dbar(ops, f),
            OperatorKind::DbarAdjoint => dbar_adjoint(ops, f),
            OperatorKind::Del => del(ops, f),
            OperatorKind::DelAdjoint => del_adjoint(ops, f),
            OperatorKind::LaplacianQ0 | OperatorKind::LaplacianQ1 => laplacian(ops, f),
            OperatorKind::BoxQ1 => rough_laplacian(ops, f),
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let (p, q) = self.kind.source();
        let f = SectionField::from_data(self.ops.geometry(), p, q, x.to_vec())
            .expect("input length matches the operator");
        self.apply_field(&f)
            .expect("operator kind matches its source bidegree")
            .into_data()
    }

    /// Dense matrix by columns; meant for small grids.
    pub fn assemble(&self) -> Mat<C64> {
        let dim = self.source_dim();
        let mut e = vec![C64::new(0.0, 0.0); dim];
        let first = self.apply(&e);
        let mut m = Mat::<C64>::zeros(first.len(), dim);
        for j in 0..dim {
            e[j] = C64::new(1.0, 0.0);
            let col = self.apply(&e);
            m.col_as_slice_mut(j).copy_from_slice(&col);
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }

    /// Coordinate text export: one `row col re im` line per entry above `drop`.
    pub fn export_coo(&self, path: &Path, drop: f64) -> Result<usize> {
        let m = self.assemble();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut count = 0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v.norm() > drop {
                    writeln!(out, "{} {} {:.17e} {:.17e}", i, j, v.re, v.im)?;
                    count += 1;
                }
            }
        }
        out.flush()?;
        Ok(count)
    }
}

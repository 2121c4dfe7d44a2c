//! Orthonormal and Tian-adapted bases of ℋ_k, the Kodaira map, the Bergman
//! function B_k with its metric T_k, and the Fubini–Study pullback.
//!
//! With σ_0 … σ_N an L²-orthonormal basis and Z(x) = (σ_l(x)) the homogeneous
//! coordinates, B_k = |Z|² and
//!
//!   T_k = α + (i/2πk) ∂∂̄ log B_k,
//!
//! with ∂∂̄ taken by plain finite differences (B_k is gauge invariant). The
//! pullback of ω_FS = (i/2π)∂∂̄ log|Z|² is evaluated pointwise from covariant
//! derivatives u_a = D_a Z:
//!
//!   (Φ*ω_FS)(∂_a, ∂_b) = (1/π) Im h(u_a, u_b),
//!   h(u, v) = ⟨u, v⟩/|Z|² − ⟨u, Z⟩⟨Z, v⟩/|Z|⁴,
//!
//! which kills the multiple of Z picked up by a gauge change and so needs no
//! chart.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cohomology::{class_of, decompose, pairs, ClassCoordinates};
use crate::error::{Error, Result};
use crate::geometry::{cr_norm, ddbar, dot, l2_inner, norm_sqr, HermitianForm, TorusGeometry};
use crate::operators::{CovariantOps, SectionField};
use crate::spectral::HkBasis;

const PI: f64 = std::f64::consts::PI;

/// An L²-orthonormal family of scalar sections.
#[derive(Clone, Debug)]
pub struct SectionBasis {
    geom: TorusGeometry,
    sections: Vec<SectionField>,
}

impl SectionBasis {
    /// Gram–Schmidt (two passes) of arbitrary sections; dependent ones are dropped.
    pub fn orthonormalize(geom: &TorusGeometry, sections: &[SectionField]) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::EmptyBasis);
        }
        let mut out: Vec<SectionField> = Vec::with_capacity(sections.len());
        for s in sections {
            let scale = crate::geometry::l2_norm(geom, s);
            let mut v = s.clone();
            for _ in 0..2 {
                for e in &out {
                    let c = l2_inner(geom, e, &v)?;
                    v.axpy(-c, e);
                }
            }
            let norm = crate::geometry::l2_norm(geom, &v);
            if norm > 1e-10 * scale && norm > 0.0 {
                out.push(v.scaled(C64::new(1.0 / norm, 0.0)));
            }
        }
        Ok(Self {
            geom: geom.clone(),
            sections: out,
        })
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn dim(&self) -> usize {
        self.sections.len()
    }

    pub fn sections(&self) -> &[SectionField] {
        &self.sections
    }

    /// Gram matrix ⟨σ_i, σ_j⟩.
    pub fn gram(&self) -> Result<Mat<C64>> {
        let d = self.dim();
        let mut g = Mat::<C64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                g[(i, j)] = l2_inner(&self.geom, &self.sections[i], &self.sections[j])?;
            }
        }
        Ok(g)
    }

    /// σ'_j = Σ_l σ_l U_lj.
    pub fn recombine(&self, u: &Mat<C64>) -> Self {
        let d = self.dim();
        let sites = self.geom.sites();
        let sections = (0..u.ncols())
            .map(|j| {
                let mut data = vec![C64::new(0.0, 0.0); sites];
                for l in 0..d {
                    let c = u[(l, j)];
                    for (o, v) in data.iter_mut().zip(self.sections[l].data()) {
                        *o += c * v;
                    }
                }
                self.sections[0].like(data)
            })
            .collect();
        Self {
            geom: self.geom.clone(),
            sections,
        }
    }

    /// Every section multiplied by e^{iχ}.
    pub fn gauge(&self, chi: &[f64]) -> Self {
        Self {
            geom: self.geom.clone(),
            sections: self.sections.iter().map(|s| s.gauge(chi)).collect(),
        }
    }

    /// Operator-norm distance between the orthogonal projectors onto the two
    /// spans: the sine of the largest principal angle.
    pub fn projector_distance(&self, other: &SectionBasis) -> Result<f64> {
        if self.dim() != other.dim() {
            return Ok(1.0);
        }
        let d = self.dim();
        let mut m = Mat::<C64>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = l2_inner(&self.geom, &self.sections[i], &other.sections[j])?;
            }
        }
        // Residuals of the other basis after projecting onto this span; their
        // Gram matrix has the squared sines as eigenvalues, which avoids the
        // √ε floor of 1 − cos².
        let residual = self.recombine(&m);
        let mut r = Mat::<C64>::zeros(d, d);
        let diffs: Vec<SectionField> = (0..d)
            .map(|j| {
                let data = other.sections[j].data().iter().zip(residual.sections[j].data()).map(|(a, b)| a - b).collect();
                other.sections[j].like(data)
            })
            .collect();
        for i in 0..d {
            for j in 0..d {
                r[(i, j)] = l2_inner(&self.geom, &diffs[i], &diffs[j])?;
            }
        }
        let sin2 = crate::spectral::dense::eigvalsh(&crate::spectral::dense::hermitize(&r))?;
        Ok(sin2[d - 1].max(0.0).sqrt())
    }
}

/// Re-orthonormalized copy of the eigenbasis.
pub fn orthonormal_basis(basis: &HkBasis) -> Result<SectionBasis> {
    SectionBasis::orthonormalize(basis.geometry(), &basis.sections())
}

/// A Haar-like random unitary from Gram–Schmidt of a random complex matrix.
pub fn random_unitary(d: usize, seed: u64) -> Mat<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        push_orthonormal(&mut cols, &mut v, 1e-6);
    }
    Mat::from_fn(d, d, |i, j| cols[j][i])
}

// Orthogonalizes v against `cols` twice; keeps it if enough survives.
fn push_orthonormal(cols: &mut Vec<Vec<C64>>, v: &mut [C64], keep: f64) -> bool {
    let start = norm_sqr(v).sqrt();
    for _ in 0..2 {
        for c in cols.iter() {
            let p = dot(c, v);
            for (x, y) in v.iter_mut().zip(c) {
                *x -= p * y;
            }
        }
    }
    let norm = norm_sqr(v).sqrt();
    if start == 0.0 || norm <= keep * start {
        return false;
    }
    cols.push(v.iter().map(|x| x / norm).collect());
    true
}

/// The basis adapted to a point x: f_0(x) ≠ 0, f_l(x) = 0 for l ≥ 1, and
/// ∂_j f_l(x) = 0 for l > j + 1, so that f_1 … f_n carry the 1-jet.
#[derive(Clone, Debug)]
pub struct TianBasis {
    pub site: usize,
    pub basis: SectionBasis,
}

pub fn tian_basis(basis: &SectionBasis, ops: &CovariantOps, site: usize) -> Result<TianBasis> {
    let d = basis.dim();
    let n = basis.geom.n();
    if d == 0 {
        return Err(Error::EmptyBasis);
    }
    // Row r holds the functional ℓ_r on each σ_l: evaluation, then ∂_1 … ∂_n.
    let mut functionals: Vec<Vec<C64>> = vec![Vec::with_capacity(d); n + 1];
    for s in &basis.sections {
        functionals[0].push(s.data()[site]);
        for j in 0..n {
            functionals[j + 1].push(ops.del_j(j, s.data())[site]);
        }
    }
    // The coefficient vector conj(ℓ_r(σ)) is the Riesz representer of ℓ_r.
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for (r, row) in functionals.iter().enumerate() {
        if r >= d {
            break;
        }
        let mut v: Vec<C64> = row.iter().map(|z| z.conj()).collect();
        if !push_orthonormal(&mut cols, &mut v, 1e-8) {
            return Err(Error::JetGeneration(site));
        }
    }
    for i in 0..d {
        if cols.len() == d {
            break;
        }
        let mut e = vec![C64::new(0.0, 0.0); d];
        e[i] = C64::new(1.0, 0.0);
        push_orthonormal(&mut cols, &mut e, 1e-6);
    }
    let u = Mat::from_fn(d, d, |i, j| cols[j][i]);
    Ok(TianBasis {
        site,
        basis: basis.recombine(&u),
    })
}

/// Homogeneous coordinates of one site.
#[derive(Clone, Debug)]
pub struct KodairaSample {
    pub site: usize,
    pub coords: Vec<C64>,
}

impl KodairaSample {
    /// Fubini–Study geodesic distance.
    pub fn distance(&self, other: &KodairaSample) -> f64 {
        let overlap = dot(&self.coords, &other.coords).norm();
        let scale = (norm_sqr(&self.coords) * norm_sqr(&other.coords)).sqrt();
        (overlap / scale).clamp(0.0, 1.0).acos()
    }
}

pub fn kodaira_sample(basis: &SectionBasis, site: usize) -> Result<KodairaSample> {
    let coords: Vec<C64> = basis.sections.iter().map(|s| s.data()[site]).collect();
    if coords.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::BasePoint(site));
    }
    Ok(KodairaSample { site, coords })
}

pub fn kodaira_map(basis: &SectionBasis) -> Result<Vec<KodairaSample>> {
    (0..basis.geom.sites())
        .map(|s| kodaira_sample(basis, s))
        .collect()
}

/// B_k and T_k on the grid. T_k is stored per site as its n×n coefficient
/// matrix (row-major), in the same normalization as α.
#[derive(Clone, Debug)]
pub struct BergmanMetricField {
    pub k: u64,
    pub alpha: HermitianForm,
    pub bk: Vec<f64>,
    pub tk: Vec<Vec<C64>>,
}

impl BergmanMetricField {
    /// Constant part of T_k: the site average, whose class equals the periods.
    pub fn periods(&self) -> Result<ClassCoordinates> {
        let n = self.alpha.n();
        let sites = self.tk.len() as f64;
        let mut mean = vec![C64::new(0.0, 0.0); n * n];
        for m in &self.tk {
            for (a, v) in mean.iter_mut().zip(m) {
                *a += v / sites;
            }
        }
        Ok(class_of(&HermitianForm::new(n, &mean)?))
    }

    /// Smallest eigenvalue of T_k over all sites (positivity check).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let n = self.alpha.n();
        let mut worst = f64::INFINITY;
        for m in &self.tk {
            let h = HermitianForm::new(n, m)?;
            worst = worst.min(h.eigenvalues()[0]);
        }
        Ok(worst)
    }
}

pub fn bergman_field(basis: &SectionBasis, alpha: &HermitianForm, k: u64) -> Result<BergmanMetricField> {
    if basis.dim() == 0 {
        return Err(Error::EmptyBasis);
    }
    let geom = &basis.geom;
    let n = geom.n();
    let mut bk = vec![0.0; geom.sites()];
    for s in &basis.sections {
        for (b, v) in bk.iter_mut().zip(s.data()) {
            *b += v.norm_sqr();
        }
    }
    if let Some(site) = bk.iter().position(|&b| b <= 0.0 || !b.is_finite()) {
        return Err(Error::BasePoint(site));
    }
    let log_b: Vec<f64> = bk.iter().map(|b| b.ln()).collect();
    let scale = 1.0 / (PI * k as f64);
    let tk = ddbar(geom, &log_b)
        .into_iter()
        .map(|m| {
            let mut out = Vec::with_capacity(n * n);
            for j in 0..n {
                for l in 0..n {
                    out.push(alpha.get(j, l) + m[j * n + l] * scale);
                }
            }
            out
        })
        .collect();
    Ok(BergmanMetricField {
        k,
        alpha: alpha.clone(),
        bk,
        tk,
    })
}

/// (1/k)Φ*ω_FS: the real coefficients on the pairs a < b, and their type parts.
#[derive(Clone, Debug)]
pub struct FsPullback {
    pub k: u64,
    pub real: Vec<Vec<f64>>,
    pub h11: Vec<Vec<C64>>,
    pub a02: Vec<C64>,
}

impl FsPullback {
    /// The (2,0) coefficient is the conjugate of the (0,2) one.
    pub fn a20(&self) -> Vec<C64> {
        self.a02.iter().map(|z| z.conj()).collect()
    }

    /// Real coefficients rebuilt from the type parts.
    pub fn reassembled(&self) -> Result<Vec<Vec<f64>>> {
        let n = (self.h11[0].len() as f64).sqrt() as usize;
        self.h11
            .iter()
            .zip(&self.a02)
            .map(|(h, &a)| Ok(crate::cohomology::recombine(&HermitianForm::new(n, h)?, a)))
            .collect()
    }
}

/// Covariant derivatives D_a σ_l for every axis a and section l.
fn basis_derivatives(basis: &SectionBasis, ops: &CovariantOps) -> Vec<Vec<Vec<C64>>> {
    let axes = basis.geom.axes();
    (0..axes)
        .map(|a| basis.sections.iter().map(|s| ops.derivative(a, s.data())).collect())
        .collect()
}

fn tangent(derivs: &[Vec<Vec<C64>>], a: usize, site: usize) -> Vec<C64> {
    derivs[a].iter().map(|d| d[site]).collect()
}

pub fn fs_pullback(basis: &SectionBasis, ops: &CovariantOps, k: u64) -> Result<FsPullback> {
    if basis.dim() == 0 {
        return Err(Error::EmptyBasis);
    }
    let geom = &basis.geom;
    let n = geom.n();
    let derivs = basis_derivatives(basis, ops);
    let pl = pairs(n);
    let mut real = Vec::with_capacity(geom.sites());
    let mut h11 = Vec::with_capacity(geom.sites());
    let mut a02 = Vec::with_capacity(geom.sites());
    for site in 0..geom.sites() {
        let z = kodaira_sample(basis, site)?.coords;
        let b = norm_sqr(&z);
        let u: Vec<Vec<C64>> = (0..geom.axes()).map(|a| tangent(&derivs, a, site)).collect();
        let uz: Vec<C64> = u.iter().map(|ua| dot(ua, &z)).collect();
        let coeffs: Vec<f64> = pl
            .iter()
            .map(|&(a, c)| {
                let h = dot(&u[a], &u[c]) / b - uz[a] * uz[c].conj() / (b * b);
                h.im / (PI * k as f64)
            })
            .collect();
        let split = decompose(n, &coeffs);
        let mut m = Vec::with_capacity(n * n);
        for j in 0..n {
            for l in 0..n {
                m.push(split.h11.get(j, l));
            }
        }
        h11.push(m);
        a02.push(split.a02);
        real.push(coeffs);
    }
    Ok(FsPullback { k, real, h11, a02 })
}

fn matrix_field_norm(geom: &TorusGeometry, field: &[Vec<C64>], r: usize) -> Result<f64> {
    let entries = field.first().map_or(0, |m| m.len());
    let mut best: f64 = 0.0;
    for e in 0..entries {
        let f: Vec<C64> = field.iter().map(|m| m[e]).collect();
        best = best.max(cr_norm(geom, &f, r)?);
    }
    Ok(best)
}

/// C⁰, C¹ and C² distances for one k.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceTable {
    pub k: u64,
    pub grid: usize,
    /// ‖T_k − α‖
    pub tk_alpha: [f64; 3],
    /// ‖(1/k)(Φ*ω_FS)^{1,1} − T_k‖
    pub fs_tk: [f64; 3],
    /// ‖(1/k)(Φ*ω_FS)^{0,2}‖
    pub fs02: [f64; 3],
    /// ‖(1/k)(Φ*ω_FS)^{2,0}‖
    pub fs20: [f64; 3],
}

impl DistanceTable {
    /// Named rows for the convergence series.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(12);
        for (name, v) in [
            ("tk_alpha", self.tk_alpha),
            ("fs_tk", self.fs_tk),
            ("fs02", self.fs02),
            ("fs20", self.fs20),
        ] {
            for (r, x) in v.iter().enumerate() {
                out.push((format!("{name}_c{r}"), *x));
            }
        }
        out
    }
}

pub fn convergence_norms(field: &BergmanMetricField, fs: &FsPullback, geom: &TorusGeometry) -> Result<DistanceTable> {
    let n = field.alpha.n();
    let alpha: Vec<C64> = (0..n * n).map(|e| field.alpha.get(e / n, e % n)).collect();
    let diff = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    let tk_alpha: Vec<Vec<C64>> = field.tk.iter().map(|m| diff(m, &alpha)).collect();
    let fs_tk: Vec<Vec<C64>> = fs.h11.iter().zip(&field.tk).map(|(f, t)| diff(f, t)).collect();
    let a02: Vec<Vec<C64>> = fs.a02.iter().map(|&a| vec![a]).collect();
    let a20: Vec<Vec<C64>> = fs.a20().into_iter().map(|a| vec![a]).collect();
    let norms = |f: &[Vec<C64>]| -> Result<[f64; 3]> {
        Ok([
            matrix_field_norm(geom, f, 0)?,
            matrix_field_norm(geom, f, 1)?,
            matrix_field_norm(geom, f, 2)?,
        ])
    };
    Ok(DistanceTable {
        k: field.k,
        grid: geom.grid(),
        tk_alpha: norms(&tk_alpha)?,
        fs_tk: norms(&fs_tk)?,
        fs02: norms(&a02)?,
        fs20: norms(&a20)?,
    })
}

/// Outcome of point-separation and immersion sampling.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingVerdict {
    pub k: u64,
    pub dim: usize,
    pub pairs: usize,
    pub separated: usize,
    pub min_distance: f64,
    pub sites: usize,
    pub immersive: usize,
    /// Smallest ratio λ_min/λ_max of the real Gram matrix of the differential.
    pub min_rank_ratio: f64,
    pub pass: bool,
}

pub const SEPARATION_TOL: f64 = 1e-6;
/// Gram eigenvalue ratio above which the differential counts as full rank.
pub const RANK_TOL: f64 = 1e-8;

// λ_min/λ_max of the real Gram matrix of the tangent vectors after removing
// their components along Z: the differential in an affine chart.
fn rank_ratio(z: &[C64], mut u: Vec<Vec<C64>>) -> Result<f64> {
    let b = norm_sqr(z);
    for v in u.iter_mut() {
        let c = dot(z, v) / b;
        for (x, y) in v.iter_mut().zip(z) {
            *x -= c * y;
        }
    }
    let axes = u.len();
    let g = Mat::from_fn(axes, axes, |a, c| C64::new(dot(&u[a], &u[c]).re, 0.0));
    let ev = crate::spectral::dense::eigvalsh(&g)?;
    let max = ev.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(if max == 0.0 { 0.0 } else { ev[0] / max })
}

/// Rank test of the differential at one site.
pub fn differential_rank_ratio(basis: &SectionBasis, ops: &CovariantOps, site: usize) -> Result<f64> {
    let z = kodaira_sample(basis, site)?.coords;
    let u = (0..basis.geom.axes())
        .map(|a| basis.sections.iter().map(|s| ops.derivative(a, s.data())[site]).collect())
        .collect();
    rank_ratio(&z, u)
}

pub fn separation_and_immersion(
    basis: &SectionBasis,
    ops: &CovariantOps,
    k: u64,
    pairs: usize,
    sites: usize,
    seed: u64,
) -> Result<EmbeddingVerdict> {
    let geom = &basis.geom;
    let total = geom.sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut separated = 0;
    let mut min_distance = f64::INFINITY;
    let mut tried = 0;
    while tried < pairs {
        let x = rng.random_range(0..total);
        let y = rng.random_range(0..total);
        if x == y {
            continue;
        }
        tried += 1;
        let d = match (kodaira_sample(basis, x), kodaira_sample(basis, y)) {
            (Ok(a), Ok(b)) => a.distance(&b),
            _ => 0.0,
        };
        min_distance = min_distance.min(d);
        if d > SEPARATION_TOL {
            separated += 1;
        }
    }
    // Derivatives of the whole basis once, then cheap per-site Gram matrices.
    let derivs = basis_derivatives(basis, ops);
    let mut immersive = 0;
    let mut min_rank_ratio = f64::INFINITY;
    for _ in 0..sites {
        let site = rng.random_range(0..total);
        let ratio = match kodaira_sample(basis, site) {
            Ok(z) => {
                let u = (0..geom.axes()).map(|a| tangent(&derivs, a, site)).collect();
                rank_ratio(&z.coords, u)?
            }
            Err(_) => 0.0,
        };
        min_rank_ratio = min_rank_ratio.min(ratio);
        if ratio > RANK_TOL {
            immersive += 1;
        }
    }
    Ok(EmbeddingVerdict {
        k,
        dim: basis.dim(),
        pairs,
        separated,
        min_distance,
        sites,
        immersive,
        min_rank_ratio,
        pass: separated == pairs && immersive == sites,
    })
}

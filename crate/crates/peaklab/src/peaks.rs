//! Gaussian peak sections and jets, their cut-off globalization and the
//! correction s = s_h + s_nh.
//!
//! A local section lives on the chart centred at a grid site x, with
//! coordinates v ∈ [−½, ½)^{2n} the minimal-image displacement and
//! z_j = v_{2j} + i v_{2j+1}. It is carried to the bundle by the staircase
//! transport W(x → y) followed by the phase exp(−iπ Σ_{a<b} F_ab v_a v_b),
//! which together equal straight-line transport from x. In that radial gauge
//! the connection vanishes at x and ∂̄_k acts on chart functions as
//! ∂/∂z̄_j + (π/2)(H_k z)_j, with H_k the (1,1) part of the bundle curvature.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bundle::LatticeBundle;
use crate::error::{Error, Result};
use crate::geometry::{l2_norm, HermitianForm, QuadraticPotential, TorusGeometry};
use crate::operators::{dbar, CovariantOps, SectionField};
use crate::spectral::{project, HkBasis};

const PI: f64 = std::f64::consts::PI;

/// A multi-index with one complex coefficient: c z^m at the chart centre.
#[derive(Clone, Debug, PartialEq)]
pub struct JetSpec {
    pub center: usize,
    pub multi: Vec<usize>,
    pub coeff: C64,
}

impl JetSpec {
    pub fn order(&self) -> usize {
        self.multi.iter().sum()
    }
}

/// A field on the chart around `center`, stored on the whole grid.
#[derive(Clone, Debug)]
pub struct LocalSection {
    pub center: usize,
    pub radius: f64,
    pub field: SectionField,
}

fn chart_z(geom: &TorusGeometry, center: usize, site: usize) -> (Vec<f64>, Vec<C64>) {
    let v = geom.displacement(center, site);
    let z = geom.complex_coords(&v);
    (v, z)
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius < 0.5 {
        Ok(())
    } else {
        Err(Error::Chart(radius))
    }
}

/// u^k = exp(−kφ/2) with φ = π z*Hz the potential of α around `center`.
pub fn gaussian_section(
    geom: &TorusGeometry,
    center: usize,
    k: f64,
    alpha: &HermitianForm,
    radius: f64,
) -> Result<LocalSection> {
    jet_section(
        geom,
        &JetSpec {
            center,
            multi: vec![0; geom.n()],
            coeff: C64::new(1.0, 0.0),
        },
        k,
        alpha,
        radius,
    )
}

/// c z^m u^k on the chart; zero outside the chart ball.
pub fn jet_section(
    geom: &TorusGeometry,
    spec: &JetSpec,
    k: f64,
    alpha: &HermitianForm,
    radius: f64,
) -> Result<LocalSection> {
    check_radius(radius)?;
    if spec.order() > 2 {
        return Err(Error::Order(spec.order()));
    }
    let phi = QuadraticPotential {
        center: geom.point(spec.center),
        hessian: alpha.clone(),
        radius,
    };
    let data = (0..geom.sites())
        .map(|s| {
            let (v, z) = chart_z(geom, spec.center, s);
            if norm(&v) >= radius {
                return C64::new(0.0, 0.0);
            }
            let mono = z
                .iter()
                .zip(&spec.multi)
                .fold(C64::new(1.0, 0.0), |acc, (zj, &m)| acc * zj.powu(m as u32));
            spec.coeff * mono * (-0.5 * k * phi.value(&z)).exp()
        })
        .collect();
    Ok(LocalSection {
        center: spec.center,
        radius,
        field: SectionField::scalar(geom, data)?,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// 1 on B(x, r₁), 0 outside B(x, r₂), with the C² quintic smoothstep between.
pub fn cutoff(geom: &TorusGeometry, center: usize, r1: f64, r2: f64) -> Result<Vec<f64>> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::Config(format!("cut-off radii need 0 < r1 < r2 (got {r1}, {r2})")));
    }
    check_radius(r2)?;
    Ok((0..geom.sites())
        .map(|s| {
            let r = norm(&geom.displacement(center, s));
            let t = ((r - r1) / (r2 - r1)).clamp(0.0, 1.0);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        })
        .collect())
}

/// Identification factor between chart values and bundle values at `site`.
pub fn chart_frame(bundle: &LatticeBundle, center: usize, site: usize) -> C64 {
    let geom = bundle.geometry();
    let offset = geom.offset(center, site);
    let v: Vec<f64> = offset.iter().map(|&o| o as f64 * geom.h()).collect();
    let f = bundle.flux_matrix();
    let mut area = 0.0;
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            area += f[a][b] * v[a] * v[b];
        }
    }
    bundle.staircase(center, &offset) * C64::from_polar(1.0, -PI * area)
}

/// s = θ·local carried into the bundle.
pub fn globalize(local: &LocalSection, theta: &[f64], bundle: &LatticeBundle) -> Result<SectionField> {
    let geom = bundle.geometry();
    if theta.len() != geom.sites() {
        return Err(Error::GeometryMismatch);
    }
    let mut out = vec![C64::new(0.0, 0.0); geom.sites()];
    for (s, o) in out.iter_mut().enumerate() {
        if theta[s] == 0.0 {
            continue;
        }
        let v = geom.displacement(local.center, s);
        if norm(&v) >= local.radius {
            return Err(Error::PathOutsideChart);
        }
        *o = theta[s] * local.field.data()[s] * chart_frame(bundle, local.center, s);
    }
    SectionField::scalar(geom, out)
}

/// ∂_j f at one site, j = 0..n, via the covariant line derivatives.
pub fn del_at(ops: &CovariantOps, f: &[C64], site: usize) -> Vec<C64> {
    let n = ops.geometry().n();
    (0..n).map(|j| ops.del_j(j, f)[site]).collect()
}

/// The corrected peak section with its diagnostics.
#[derive(Clone, Debug)]
pub struct PeakSection {
    pub center: usize,
    pub k: u64,
    pub s: SectionField,
    pub s_h: SectionField,
    pub s_nh: SectionField,
    pub diag: PeakDiagnostics,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeakDiagnostics {
    pub snh_sq: f64,
    pub dbar_sq: f64,
    /// ‖s_nh‖² / ‖∂̄_k s‖²
    pub ratio: f64,
    /// 4/(δ₀k) times the allowed slack
    pub bound: f64,
    pub value_at_center: f64,
    pub s_norm: f64,
    pub sh_norm: f64,
    /// sup |s_h| on B(x, r/√k)
    pub ball_sup: f64,
    /// share of ‖s_h‖² inside B(x, r/√k)
    pub ball_mass: f64,
    pub pass: bool,
}

/// Splits a global section against ℋ_k and checks ‖s_nh‖² ≤ slack·4/(δ₀k)·‖∂̄_k s‖².
pub fn correct(
    s: &SectionField,
    basis: &HkBasis,
    ops: &CovariantOps,
    center: usize,
    delta0: f64,
    slack: f64,
    ball_radius: f64,
) -> Result<PeakSection> {
    let geom = ops.geometry();
    let k = basis.k;
    let (s_h, s_nh) = project(s, basis);
    let snh_sq = l2_norm(geom, &s_nh).powi(2);
    let dbar_sq = l2_norm(geom, &dbar(ops, s)?).powi(2);
    let ratio = if dbar_sq > 0.0 { snh_sq / dbar_sq } else { 0.0 };
    let bound = slack * 4.0 / (delta0 * k as f64);
    let r = ball_radius / (k as f64).sqrt();
    let mut ball_sup: f64 = 0.0;
    let mut inside = 0.0;
    for site in 0..geom.sites() {
        if norm(&geom.displacement(center, site)) <= r {
            let v = s_h.data()[site].norm();
            ball_sup = ball_sup.max(v);
            inside += v * v * geom.cell();
        }
    }
    let sh_norm = l2_norm(geom, &s_h);
    let diag = PeakDiagnostics {
        snh_sq,
        dbar_sq,
        ratio,
        bound,
        value_at_center: s_h.data()[center].norm(),
        s_norm: l2_norm(geom, s),
        sh_norm,
        ball_sup,
        ball_mass: if sh_norm > 0.0 { inside / (sh_norm * sh_norm) } else { 0.0 },
        pass: snh_sq <= bound * dbar_sq,
    };
    Ok(PeakSection {
        center,
        k,
        s: s.clone(),
        s_h,
        s_nh,
        diag,
    })
}

/// Parameters of the cut-off Gaussian construction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PeakParams {
    pub r1: f64,
    pub r2: f64,
    pub delta0: f64,
    /// factor on 4/(δ₀k) in the correction bound
    pub slack: f64,
    /// radius r in the shrinking ball B(x, r/√k)
    pub ball: f64,
}

/// Cut-off Gaussian at `center`, globalized and corrected.
pub fn peak_section(
    bundle: &LatticeBundle,
    ops: &CovariantOps,
    basis: &HkBasis,
    alpha: &HermitianForm,
    center: usize,
    params: &PeakParams,
) -> Result<PeakSection> {
    jet_peak_section(
        bundle,
        ops,
        basis,
        alpha,
        &JetSpec {
            center,
            multi: vec![0; bundle.geometry().n()],
            coeff: C64::new(1.0, 0.0),
        },
        params,
    )
}

pub fn jet_peak_section(
    bundle: &LatticeBundle,
    ops: &CovariantOps,
    basis: &HkBasis,
    alpha: &HermitianForm,
    spec: &JetSpec,
    params: &PeakParams,
) -> Result<PeakSection> {
    let geom = bundle.geometry();
    let k = basis.k as f64;
    let local = jet_section(geom, spec, k, alpha, params.r2 + 0.5 * (0.5 - params.r2))?;
    let theta = cutoff(geom, spec.center, params.r1, params.r2)?;
    let s = globalize(&local, &theta, bundle)?;
    correct(&s, basis, ops, spec.center, params.delta0, params.slack, params.ball)
}

/// ε_k = C(1/k^{4/b₂} + δ_k) with δ_k = 4/(δ₀k).
pub fn epsilon_k(c: f64, k: u64, b2: usize, delta0: f64) -> f64 {
    let k = k as f64;
    c * (k.powf(-4.0 / b2 as f64) + 4.0 / (delta0 * k))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeakReport {
    pub k: u64,
    pub center: usize,
    pub value_deviation: f64,
    pub epsilon: f64,
    /// (i): | |s_h(x)| − 1 | ≤ ε_k
    pub value_ok: bool,
    /// (ii): | ‖s_h‖/‖s‖ − 1 | ≤ δ_k^{1/2}
    pub norm_ok: bool,
    /// (iii): | sup_{B(x, r/√k)} |s_h| − 1 | ≤ ε_k^{1/2}
    pub ball_ok: bool,
    pub nonzero: bool,
}

pub fn peak_report(ps: &PeakSection, c_peak: f64, b2: usize, delta0: f64) -> PeakReport {
    let eps = epsilon_k(c_peak, ps.k, b2, delta0);
    let dk = 4.0 / (delta0 * ps.k as f64);
    let d = &ps.diag;
    let dev = (d.value_at_center - 1.0).abs();
    PeakReport {
        k: ps.k,
        center: ps.center,
        value_deviation: dev,
        epsilon: eps,
        value_ok: dev <= eps,
        norm_ok: d.s_norm > 0.0 && (d.sh_norm / d.s_norm - 1.0).abs() <= dk.sqrt(),
        ball_ok: (d.ball_sup - 1.0).abs() <= eps.sqrt(),
        nonzero: d.value_at_center > 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum JetVerdict {
    Generated { corrected: f64, uncorrected: f64 },
    Failed { corrected: f64, uncorrected: f64 },
    DegenerateInput,
}

impl JetVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, JetVerdict::Generated { .. })
    }
}

/// Whether the corrected jet keeps at least half of its ∂^m/∂z^m at the centre.
pub fn jet_generation_check(
    bundle: &LatticeBundle,
    ops: &CovariantOps,
    basis: &HkBasis,
    alpha: &HermitianForm,
    spec: &JetSpec,
    params: &PeakParams,
) -> Result<JetVerdict> {
    if spec.order() > 1 {
        return Err(Error::Order(spec.order()));
    }
    if spec.coeff.norm() == 0.0 {
        return Ok(JetVerdict::DegenerateInput);
    }
    let ps = jet_peak_section(bundle, ops, basis, alpha, spec, params)?;
    let (before, after) = match spec.multi.iter().position(|&m| m == 1) {
        None => (ps.s.data()[spec.center].norm(), ps.s_h.data()[spec.center].norm()),
        Some(j) => (
            del_at(ops, ps.s.data(), spec.center)[j].norm(),
            del_at(ops, ps.s_h.data(), spec.center)[j].norm(),
        ),
    };
    Ok(if after >= 0.5 * before {
        JetVerdict::Generated {
            corrected: after,
            uncorrected: before,
        }
    } else {
        JetVerdict::Failed {
            corrected: after,
            uncorrected: before,
        }
    })
}

/// L² size of ∂f/∂z̄_j + (k/2) f ∂φ/∂z̄_j over the chart ball, by centered
/// differences in the chart coordinates (one value per j, summed).
pub fn antiholo_identity_check(local: &LocalSection, phi: &QuadraticPotential, k: f64, geom: &TorusGeometry) -> f64 {
    let f = local.field.data();
    let h = geom.h();
    let n = geom.n();
    let mut total = 0.0;
    for s in 0..geom.sites() {
        let (v, z) = chart_z(geom, local.center, s);
        // keep one cell away from the chart edge so the stencil stays inside
        if norm(&v) >= local.radius - 2.0 * h {
            continue;
        }
        let dphi = phi.dbar(&z);
        for j in 0..n {
            let dx = (f[geom.shift(s, 2 * j, 1)] - f[geom.shift(s, 2 * j, -1)]) / (2.0 * h);
            let dy = (f[geom.shift(s, 2 * j + 1, 1)] - f[geom.shift(s, 2 * j + 1, -1)]) / (2.0 * h);
            let dbar = 0.5 * (dx + C64::new(0.0, 1.0) * dy);
            let r = dbar + 0.5 * k * f[s] * dphi[j];
            total += r.norm_sqr() * geom.cell();
        }
    }
    total.sqrt()
}

// Like `cutoff` but C^∞, so that spectral derivatives of the bumps converge
// faster than any power of h.
fn smooth_cutoff(geom: &TorusGeometry, center: usize, r1: f64, r2: f64) -> Vec<f64> {
    let psi = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    (0..geom.sites())
        .map(|s| {
            let t = ((norm(&geom.displacement(center, s)) - r1) / (r2 - r1)).clamp(0.0, 1.0);
            psi(1.0 - t) / (psi(1.0 - t) + psi(t))
        })
        .collect()
}

/// A smooth random section: a few cut-off bumps with random quadratic
/// profiles at random centres, carried into the bundle. Smooth as a section,
/// unlike white noise, so discretization rates are visible on it.
pub fn random_smooth_section(bundle: &LatticeBundle, seed: u64, bumps: usize) -> SectionField {
    let geom = bundle.geometry();
    let n = geom.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = SectionField::zeros(geom, 0, 0);
    let cplx = |rng: &mut ChaCha8Rng| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    for _ in 0..bumps {
        let center = rng.random_range(0..geom.sites());
        let width: f64 = rng.random_range(0.12..0.2);
        let c0 = cplx(&mut rng);
        let lin: Vec<C64> = (0..2 * n).map(|_| cplx(&mut rng)).collect();
        let quad: Vec<C64> = (0..2 * n).map(|_| cplx(&mut rng)).collect();
        let theta = smooth_cutoff(geom, center, 0.25, 0.45);
        let data = (0..geom.sites())
            .map(|s| {
                if theta[s] == 0.0 {
                    return C64::new(0.0, 0.0);
                }
                let v = geom.displacement(center, s);
                let r2: f64 = v.iter().map(|a| a * a).sum();
                let mut p = c0;
                for a in 0..2 * n {
                    p += lin[a] * v[a] + quad[a] * v[a] * v[(a + 1) % (2 * n)];
                }
                theta[s] * p * (-r2 / (2.0 * width * width)).exp() * chart_frame(bundle, center, s)
            })
            .collect();
        total.axpy(C64::new(1.0, 0.0), &total.like(data));
    }
    total
}

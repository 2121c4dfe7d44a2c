//! The flat torus R^{2n}/Z^{2n}, its grid, constant Hermitian forms and norms.
//!
//! Real coordinates are ordered t = (x1, y1, x2, y2) and z_j = x_j + i y_j.
//! A Hermitian matrix H stands for the real form (i/2) Σ H_jl dz_j ∧ dz̄_l,
//! so H = 1 is the Euclidean Kähler form dx∧dy with unit total volume and the
//! diagonal entries of H are the periods over the (x_j, y_j) tori.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::SectionField;

/// Square grid on the unit torus of complex dimension 1 or 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGeometry {
    n: usize,
    grid: usize,
    sites: usize,
}

impl TorusGeometry {
    pub fn new(n: usize, grid: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::Dimension(n));
        }
        if grid % 2 != 0 {
            return Err(Error::OddGrid(grid));
        }
        if grid < 8 {
            return Err(Error::SmallGrid(grid));
        }
        Ok(Self {
            n,
            grid,
            sites: grid.pow(2 * n as u32),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per real axis.
    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn h(&self) -> f64 {
        1.0 / self.grid as f64
    }

    /// Number of real axes, 2n.
    pub fn axes(&self) -> usize {
        2 * self.n
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Volume of one grid cell, h^{2n}.
    pub fn cell(&self) -> f64 {
        self.h().powi(self.axes() as i32)
    }

    /// Site-index stride of an axis; axis 0 varies slowest.
    pub fn stride(&self, axis: usize) -> usize {
        self.grid.pow((self.axes() - 1 - axis) as u32)
    }

    pub fn coord(&self, site: usize, axis: usize) -> usize {
        (site / self.stride(axis)) % self.grid
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        (0..self.axes()).map(|a| self.coord(site, a)).collect()
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .enumerate()
            .map(|(a, &c)| (c % self.grid) * self.stride(a))
            .sum()
    }

    pub fn shift(&self, site: usize, axis: usize, delta: isize) -> usize {
        let c = self.coord(site, axis) as isize;
        let nc = (c + delta).rem_euclid(self.grid as isize) as usize;
        site + nc * self.stride(axis) - (c as usize) * self.stride(axis)
    }

    /// Real coordinates of a site in [0, 1)^{2n}.
    pub fn point(&self, site: usize) -> Vec<f64> {
        let h = self.h();
        (0..self.axes())
            .map(|a| self.coord(site, a) as f64 * h)
            .collect()
    }

    /// Integer minimal-image displacement from `from` to `to`, each entry in [-N/2, N/2).
    pub fn offset(&self, from: usize, to: usize) -> Vec<isize> {
        let g = self.grid as isize;
        (0..self.axes())
            .map(|a| {
                let d = self.coord(to, a) as isize - self.coord(from, a) as isize;
                (d + g / 2).rem_euclid(g) - g / 2
            })
            .collect()
    }

    /// Minimal-image displacement in torus units.
    pub fn displacement(&self, from: usize, to: usize) -> Vec<f64> {
        let h = self.h();
        self.offset(from, to)
            .into_iter()
            .map(|d| d as f64 * h)
            .collect()
    }

    /// First site of every grid line running along `axis`.
    pub fn line_starts(&self, axis: usize) -> Vec<usize> {
        (0..self.sites)
            .filter(|&s| self.coord(s, axis) == 0)
            .collect()
    }

    /// Complex chart coordinates z_j of a real displacement.
    pub fn complex_coords(&self, v: &[f64]) -> Vec<C64> {
        (0..self.n).map(|j| C64::new(v[2 * j], v[2 * j + 1])).collect()
    }
}

/// Constant Hermitian n×n coefficient matrix of a (1,1)-form.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianForm {
    n: usize,
    entries: [C64; 4],
}

impl HermitianForm {
    /// Builds from row-major entries and checks Hermitian symmetry.
    pub fn new(n: usize, rows: &[C64]) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::Dimension(n));
        }
        if rows.len() != n * n {
            return Err(Error::Dimension(n));
        }
        let mut entries = [C64::new(0.0, 0.0); 4];
        for j in 0..n {
            for l in 0..n {
                entries[2 * j + l] = rows[n * j + l];
            }
        }
        let scale = rows.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for j in 0..n {
            for l in 0..n {
                if (entries[2 * j + l] - entries[2 * l + j].conj()).norm() > 1e-12 * scale {
                    return Err(Error::NotHermitian);
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// The Euclidean form Σ dx_j ∧ dy_j.
    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut entries = [C64::new(0.0, 0.0); 4];
        for (j, &v) in d.iter().enumerate() {
            entries[3 * j] = C64::new(v, 0.0);
        }
        Self {
            n: d.len(),
            entries,
        }
    }

    /// 2×2 form with real diagonal and off-diagonal entry H_12 = h.
    pub fn two(a: f64, d: f64, h: C64) -> Self {
        Self {
            n: 2,
            entries: [C64::new(a, 0.0), h, h.conj(), C64::new(d, 0.0)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, l: usize) -> C64 {
        self.entries[2 * j + l]
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            *e *= t;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, o) in out.entries.iter_mut().zip(other.entries.iter()) {
            *e -= o;
        }
        out
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.entries[0].re,
            _ => (self.entries[0] * self.entries[3] - self.entries[1] * self.entries[2]).re,
        }
    }

    /// Ordinary eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.entries[0].re];
        }
        let a = self.entries[0].re;
        let d = self.entries[3].re;
        let b = self.entries[1].norm();
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        vec![mid - rad, mid + rad]
    }

    pub fn is_positive(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }

    /// Matrix-vector product H·z.
    pub fn apply(&self, z: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|l| self.get(j, l) * z[l]).sum())
            .collect()
    }

    /// The real number z*Hz.
    pub fn quadratic(&self, z: &[C64]) -> f64 {
        let hz = self.apply(z);
        z.iter().zip(hz.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Generalized eigenvalues of (α, ω), ascending. δ₀ is half the smallest.
pub fn alpha_eigenvalues(alpha: &HermitianForm, omega: &HermitianForm) -> Result<Vec<f64>> {
    if alpha.n() != omega.n() {
        return Err(Error::Dimension(alpha.n()));
    }
    if !omega.is_positive() {
        return Err(Error::NotPositive);
    }
    if alpha.n() == 1 {
        return Ok(vec![alpha.get(0, 0).re / omega.get(0, 0).re]);
    }
    // ω = L L*, then eig(L⁻¹ α L⁻*).
    let l11 = omega.get(0, 0).re.sqrt();
    let l21 = omega.get(1, 0) / l11;
    let l22 = (omega.get(1, 1).re - l21.norm_sqr()).sqrt();
    let inv = [
        C64::new(1.0 / l11, 0.0),
        C64::new(0.0, 0.0),
        -l21 / (l11 * l22),
        C64::new(1.0 / l22, 0.0),
    ];
    let mut m = [C64::new(0.0, 0.0); 4];
    for j in 0..2 {
        for l in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..2 {
                for q in 0..2 {
                    acc += inv[2 * j + p] * alpha.get(p, q) * inv[2 * l + q].conj();
                }
            }
            m[2 * j + l] = acc;
        }
    }
    let reduced = HermitianForm::two(m[0].re, m[3].re, m[1]);
    Ok(reduced.eigenvalues())
}

/// Exact quadratic Kähler potential of a constant form around a chart center.
#[derive(Clone, Debug)]
pub struct QuadraticPotential {
    pub center: Vec<f64>,
    pub hessian: HermitianForm,
    pub radius: f64,
}

impl QuadraticPotential {
    /// φ(z) = π z*Hz, so that (i/2π)∂∂̄φ reproduces (i/2) Σ H dz∧dz̄.
    pub fn value(&self, z: &[C64]) -> f64 {
        std::f64::consts::PI * self.hessian.quadratic(z)
    }

    /// ∂φ/∂z̄_j = π (Hz)_j.
    pub fn dbar(&self, z: &[C64]) -> Vec<C64> {
        self.hessian
            .apply(z)
            .into_iter()
            .map(|w| w * std::f64::consts::PI)
            .collect()
    }

    /// ∂φ/∂z_j, the conjugate of ∂φ/∂z̄_j since φ is real.
    pub fn del(&self, z: &[C64]) -> Vec<C64> {
        self.dbar(z).into_iter().map(|w| w.conj()).collect()
    }
}

pub fn local_potential(alpha: &HermitianForm, x: &[f64]) -> QuadraticPotential {
    QuadraticPotential {
        center: x.to_vec(),
        hessian: alpha.clone(),
        radius: 0.5,
    }
}

/// L² pairing h^{2n} Σ ⟨f, g⟩ with weight 2 per differential, antilinear in f.
pub fn l2_inner(geom: &TorusGeometry, f: &SectionField, g: &SectionField) -> Result<C64> {
    if f.bidegree() != g.bidegree() {
        let (a, b) = f.bidegree();
        let (c, d) = g.bidegree();
        return Err(Error::Bidegree(a, b, c, d));
    }
    if f.sites() != geom.sites() || g.sites() != geom.sites() || f.n() != geom.n() {
        return Err(Error::GeometryMismatch);
    }
    Ok(f.weight() * geom.cell() * dot(f.data(), g.data()))
}

pub fn l2_norm(geom: &TorusGeometry, f: &SectionField) -> f64 {
    (f.weight() * geom.cell() * norm_sqr(f.data())).sqrt()
}

/// Σ conj(a_i) b_i, summed in fixed-size chunks for a reproducible order.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.chunks(256)
        .zip(b.chunks(256))
        .map(|(x, y)| {
            x.iter()
                .zip(y.iter())
                .map(|(u, v)| u.conj() * v)
                .sum::<C64>()
        })
        .sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.chunks(256)
        .map(|x| x.iter().map(|u| u.norm_sqr()).sum::<f64>())
        .sum()
}

/// C^r norm: the largest sup-norm among the field and all of its centered
/// finite-difference derivatives of order at most r.
pub fn cr_norm(geom: &TorusGeometry, field: &[C64], r: usize) -> Result<f64> {
    if r > 2 {
        return Err(Error::Order(r));
    }
    if field.len() != geom.sites() {
        return Err(Error::GeometryMismatch);
    }
    let sup = |f: &dyn Fn(usize) -> C64| (0..geom.sites()).map(|s| f(s).norm()).fold(0.0, f64::max);
    let mut best = sup(&|s| field[s]);
    if r == 0 {
        return Ok(best);
    }
    let h = geom.h();
    for a in 0..geom.axes() {
        let d = sup(&|s| (field[geom.shift(s, a, 1)] - field[geom.shift(s, a, -1)]) / (2.0 * h));
        best = best.max(d);
    }
    if r == 1 {
        return Ok(best);
    }
    for a in 0..geom.axes() {
        for b in a..geom.axes() {
            let d = if a == b {
                sup(&|s| {
                    (field[geom.shift(s, a, 1)] - 2.0 * field[s] + field[geom.shift(s, a, -1)])
                        / (h * h)
                })
            } else {
                sup(&|s| {
                    let pp = geom.shift(geom.shift(s, a, 1), b, 1);
                    let pm = geom.shift(geom.shift(s, a, 1), b, -1);
                    let mp = geom.shift(geom.shift(s, a, -1), b, 1);
                    let mm = geom.shift(geom.shift(s, a, -1), b, -1);
                    (field[pp] - field[pm] - field[mp] + field[mm]) / (4.0 * h * h)
                })
            };
            best = best.max(d);
        }
    }
    Ok(best)
}

pub fn cr_norm_real(geom: &TorusGeometry, field: &[f64], r: usize) -> Result<f64> {
    let c: Vec<C64> = field.iter().map(|&x| C64::new(x, 0.0)).collect();
    cr_norm(geom, &c, r)
}

/// Centered second differences ∂_j ∂̄_l of a real scalar field, one matrix per site
/// in row-major order (j, l).
pub fn ddbar(geom: &TorusGeometry, field: &[f64]) -> Vec<Vec<C64>> {
    let n = geom.n();
    let h = geom.h();
    let second = |s: usize, a: usize, b: usize| -> f64 {
        if a == b {
            (field[geom.shift(s, a, 1)] - 2.0 * field[s] + field[geom.shift(s, a, -1)]) / (h * h)
        } else {
            let pp = geom.shift(geom.shift(s, a, 1), b, 1);
            let pm = geom.shift(geom.shift(s, a, 1), b, -1);
            let mp = geom.shift(geom.shift(s, a, -1), b, 1);
            let mm = geom.shift(geom.shift(s, a, -1), b, -1);
            (field[pp] - field[pm] - field[mp] + field[mm]) / (4.0 * h * h)
        }
    };
    let i = C64::new(0.0, 1.0);
    (0..geom.sites())
        .map(|s| {
            let mut out = Vec::with_capacity(n * n);
            for j in 0..n {
                for l in 0..n {
                    let (xj, yj, xl, yl) = (2 * j, 2 * j + 1, 2 * l, 2 * l + 1);
                    // ∂_j ∂̄_l = ¼(∂x_j − i∂y_j)(∂x_l + i∂y_l)
                    let v = C64::new(second(s, xj, xl) + second(s, yj, yl), 0.0)
                        + i * (second(s, xj, yl) - second(s, yj, xl));
                    out.push(0.25 * v);
                }
            }
            out
        })
        .collect()
}

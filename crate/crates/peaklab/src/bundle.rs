//! Constant-curvature U(1) lattice bundles.
//!
//! The link phase θ_b(s) on the edge s → s + e_b is the parallel transport
//! from the fibre at s to the fibre at s + e_b: a parallel section satisfies
//! f(s + e_b) = e^{iθ_b(s)} f(s). The linear gauge
//!
//!   θ_b(s) = 2π h Σ_{a<b} F_ab t_a,
//!
//! plus the twist −2π Σ_{c>b} F_bc t_c on wrap-around edges, gives every
//! plaquette in the (a, b) plane the phase 2π F_ab h² exactly.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::cohomology::{pair_index, pairs, IntegralApproximant};
use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

#[derive(Clone, Debug)]
pub struct LatticeBundle {
    geom: TorusGeometry,
    flux: Vec<i64>,
    /// links[b][s] = θ_b(s)
    links: Vec<Vec<f64>>,
}

impl LatticeBundle {
    pub fn geometry(&self) -> &TorusGeometry {
        &self.geom
    }

    pub fn flux(&self) -> &[i64] {
        &self.flux
    }

    /// Antisymmetric flux matrix F_ab.
    pub fn flux_matrix(&self) -> Vec<Vec<f64>> {
        let axes = self.geom.axes();
        let mut f = vec![vec![0.0; axes]; axes];
        for (i, &(a, b)) in pairs(self.geom.n()).iter().enumerate() {
            f[a][b] = self.flux[i] as f64;
            f[b][a] = -(self.flux[i] as f64);
        }
        f
    }

    pub fn link(&self, axis: usize, site: usize) -> f64 {
        self.links[axis][site]
    }

    pub fn links(&self, axis: usize) -> &[f64] {
        &self.links[axis]
    }

    /// e^{iθ_b(s)}.
    pub fn transport(&self, axis: usize, site: usize) -> C64 {
        C64::from_polar(1.0, self.links[axis][site])
    }

    pub fn is_trivial(&self) -> bool {
        self.links.iter().all(|l| l.iter().all(|&t| t == 0.0))
    }

    /// Oriented plaquette phase divided by 2πh², per plane (in [`pairs`] order) and site.
    pub fn plaquette_curvature(&self) -> Vec<Vec<f64>> {
        let g = &self.geom;
        let scale = 2.0 * std::f64::consts::PI * g.h() * g.h();
        pairs(g.n())
            .into_iter()
            .map(|(a, b)| {
                (0..g.sites())
                    .map(|s| {
                        let phase = self.links[a][s] + self.links[b][g.shift(s, a, 1)]
                            - self.links[b][s]
                            - self.links[a][g.shift(s, b, 1)];
                        wrap(phase) / scale
                    })
                    .collect()
            })
            .collect()
    }

    /// Total flux through each coordinate plane: the sum of plaquette phases over
    /// one (a, b) slice, divided by 2π.
    pub fn plane_fluxes(&self) -> Vec<f64> {
        let g = &self.geom;
        let curv = self.plaquette_curvature();
        let h2 = g.h() * g.h();
        pairs(g.n())
            .into_iter()
            .zip(curv)
            .map(|((a, b), field)| {
                (0..g.sites())
                    .filter(|&s| (0..g.axes()).all(|c| c == a || c == b || g.coord(s, c) == 0))
                    .map(|s| field[s] * h2)
                    .sum()
            })
            .collect()
    }

    /// Links after the section rescaling f ↦ e^{iχ} f.
    pub fn gauge_transform(&self, chi: &[f64]) -> Self {
        let g = &self.geom;
        let links = (0..g.axes())
            .map(|b| {
                (0..g.sites())
                    .map(|s| self.links[b][s] + chi[g.shift(s, b, 1)] - chi[s])
                    .collect()
            })
            .collect();
        Self {
            geom: g.clone(),
            flux: self.flux.clone(),
            links,
        }
    }

    /// Transport along an integer displacement, axis 0 first, then axis 1, and so on.
    pub fn staircase(&self, from: usize, offset: &[isize]) -> C64 {
        let g = &self.geom;
        let mut site = from;
        let mut phase = 0.0;
        for (axis, &d) in offset.iter().enumerate() {
            for _ in 0..d.unsigned_abs() {
                if d > 0 {
                    phase += self.links[axis][site];
                    site = g.shift(site, axis, 1);
                } else {
                    site = g.shift(site, axis, -1);
                    phase -= self.links[axis][site];
                }
            }
        }
        C64::from_polar(1.0, phase)
    }

    /// Ordered product of links along the staircase path inside the chart centred at `from`.
    pub fn wilson_line(&self, from: usize, to: usize) -> Result<C64> {
        let offset = self.geom.offset(from, to);
        let half = (self.geom.grid() / 2) as isize;
        if offset.iter().any(|&d| d.abs() >= half) {
            return Err(Error::PathOutsideChart);
        }
        Ok(self.staircase(from, &offset))
    }

    /// Little-endian dump: u32 n, u32 N, u32 b₂, b₂ × i64 flux, then 2n·N^{2n} f64
    /// link phases, axis-major and row-major in sites.
    pub fn write_links(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(&(self.geom.n() as u32).to_le_bytes())?;
        out.write_all(&(self.geom.grid() as u32).to_le_bytes())?;
        out.write_all(&(self.flux.len() as u32).to_le_bytes())?;
        for &f in &self.flux {
            out.write_all(&f.to_le_bytes())?;
        }
        for axis in &self.links {
            for &t in axis {
                out.write_all(&t.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_links(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut pos = 0;
        let mut take = |len: usize| -> Result<&[u8]> {
            let chunk = bytes
                .get(pos..pos + len)
                .ok_or_else(|| Error::Artifact("truncated link dump".into()))?;
            pos += len;
            Ok(chunk)
        };
        let word = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
        let n = word(take(4)?);
        let grid = word(take(4)?);
        let count = word(take(4)?);
        let geom = TorusGeometry::new(n, grid)?;
        let mut flux = Vec::with_capacity(count);
        for _ in 0..count {
            flux.push(i64::from_le_bytes(take(8)?.try_into().unwrap()));
        }
        let mut links = Vec::with_capacity(geom.axes());
        for _ in 0..geom.axes() {
            let mut axis = Vec::with_capacity(geom.sites());
            for _ in 0..geom.sites() {
                axis.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
            }
            links.push(axis);
        }
        Ok(Self { geom, flux, links })
    }
}

fn wrap(phase: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    phase - tau * (phase / tau).round()
}

/// Constant-field bundle with the given integer plane fluxes.
pub fn build_from_flux(geom: &TorusGeometry, flux: &[i64]) -> Result<LatticeBundle> {
    let n = geom.n();
    if flux.len() != pairs(n).len() {
        return Err(Error::Dimension(n));
    }
    let axes = geom.axes();
    let h = geom.h();
    let tau = 2.0 * std::f64::consts::PI;
    let f = |a: usize, b: usize| flux[pair_index(n, a, b).unwrap()] as f64;
    let links = (0..axes)
        .map(|b| {
            (0..geom.sites())
                .map(|s| {
                    let t = geom.point(s);
                    let mut theta: f64 = (0..b).map(|a| tau * f(a, b) * t[a] * h).sum();
                    if geom.coord(s, b) == geom.grid() - 1 {
                        theta -= (b + 1..axes).map(|c| tau * f(b, c) * t[c]).sum::<f64>();
                    }
                    theta
                })
                .collect()
        })
        .collect();
    Ok(LatticeBundle {
        geom: geom.clone(),
        flux: flux.to_vec(),
        links,
    })
}

pub fn build_bundle(approx: &IntegralApproximant, geom: &TorusGeometry) -> Result<LatticeBundle> {
    if approx.n() != geom.n() {
        return Err(Error::Dimension(approx.n()));
    }
    build_from_flux(geom, &approx.m)
}

pub fn trivial_bundle(geom: &TorusGeometry) -> LatticeBundle {
    LatticeBundle {
        geom: geom.clone(),
        flux: vec![0; pairs(geom.n()).len()],
        links: vec![vec![0.0; geom.sites()]; geom.axes()],
    }
}

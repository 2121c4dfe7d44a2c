use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;

fn binom(n: usize, k: usize) -> usize {
    match (n, k) {
        (_, 0) => 1,
        (n, k) if k > n => 0,
        (n, 1) => n,
        (2, 2) => 1,
        _ => 0,
    }
}

/// An L_k-valued (p, q)-form on the grid, p ≤ 1, q ≤ 2.
///
/// Components are stored one after another, each a full grid array, in the
/// order dz_I ∧ dz̄_J with I outer and J inner. For q = 2 (only n = 2) the single
/// stored component is the dz̄₁∧dz̄₂ coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionField {
    p: usize,
    q: usize,
    n: usize,
    sites: usize,
    data: Vec<C64>,
}

impl SectionField {
    pub fn zeros(geom: &TorusGeometry, p: usize, q: usize) -> Self {
        let count = binom(geom.n(), p) * binom(geom.n(), q);
        Self {
            p,
            q,
            n: geom.n(),
            sites: geom.sites(),
            data: vec![C64::new(0.0, 0.0); count * geom.sites()],
        }
    }

    pub fn scalar(geom: &TorusGeometry, values: Vec<C64>) -> Result<Self> {
        Self::from_data(geom, 0, 0, values)
    }

    pub fn from_data(geom: &TorusGeometry, p: usize, q: usize, data: Vec<C64>) -> Result<Self> {
        let mut f = Self::zeros(geom, p, q);
        if data.len() != f.data.len() {
            return Err(Error::GeometryMismatch);
        }
        f.data = data;
        Ok(f)
    }

    /// Same shape, new values.
    pub fn like(&self, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            data,
            ..self.clone()
        }
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn components(&self) -> usize {
        self.data.len() / self.sites
    }

    /// Pointwise metric weight 2^{p+q} of a unit coordinate coefficient.
    pub fn weight(&self) -> f64 {
        (1u32 << (self.p + self.q)) as f64
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[C64] {
        &self.data[c * self.sites..(c + 1) * self.sites]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.sites..(c + 1) * self.sites]
    }

    pub fn axpy(&mut self, a: C64, other: &SectionField) {
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * y;
        }
    }

    pub fn sub(&self, other: &SectionField) -> SectionField {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn scaled(&self, a: C64) -> SectionField {
        self.like(self.data.iter().map(|x| a * x).collect())
    }

    /// The covariant partner of a gauge change f ↦ e^{iχ} f.
    pub fn gauge(&self, chi: &[f64]) -> SectionField {
        let mut out = self.clone();
        for c in 0..self.components() {
            for (x, &t) in out.component_mut(c).iter_mut().zip(chi) {
                *x *= C64::from_polar(1.0, t);
            }
        }
        out
    }

    /// Independent uniform entries in the unit square; no smoothness.
    pub fn noise(geom: &TorusGeometry, p: usize, q: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Self::zeros(geom, p, q);
        for x in f.data.iter_mut() {
            *x = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        f
    }
}

/// Random gauge phases χ(s) in [0, 2π).
pub fn random_gauge(geom: &TorusGeometry, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..geom.sites())
        .map(|_| rng.random_range(0.0..2.0 * std::f64::consts::PI))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::binom;

    #[test]
    fn component_counts() {
        assert_eq!([binom(1, 0), binom(1, 1), binom(1, 2)], [1, 1, 0]);
        assert_eq!([binom(2, 0), binom(2, 1), binom(2, 2)], [1, 2, 1]);
    }
}

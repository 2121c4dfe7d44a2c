//! Period coordinates, Dirichlet selection of integral approximants and their
//! splitting into pure types.
//!
//! A constant real 2-form is stored by its coefficients F_ab on dt_a ∧ dt_b for
//! a < b, in the order returned by [`pairs`]. On the unit torus these are also
//! its periods over the coordinate 2-tori.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HermitianForm;

/// Coordinate planes (a, b), a < b, in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let axes = 2 * n;
    let mut out = Vec::new();
    for a in 0..axes {
        for b in a + 1..axes {
            out.push((a, b));
        }
    }
    out
}

/// Second Betti number of the torus of complex dimension n.
pub fn b2(n: usize) -> usize {
    n * (2 * n - 1)
}

pub fn pair_index(n: usize, a: usize, b: usize) -> Option<usize> {
    pairs(n).iter().position(|&p| p == (a, b))
}

/// Periods of a closed 2-form over the integral basis of H_2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCoordinates(pub Vec<f64>);

impl ClassCoordinates {
    pub fn n(&self) -> usize {
        if self.0.len() == 1 {
            1
        } else {
            2
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        Self(self.0.iter().map(|c| c * t).collect())
    }

    /// The (1,1) part as a Hermitian matrix.
    pub fn hermitian(&self) -> HermitianForm {
        decompose(self.n(), &self.0).h11
    }
}

/// A constant-coefficient real 2-form on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantForm {
    pub n: usize,
    pub coeffs: Vec<f64>,
}

impl ConstantForm {
    /// The single basis element dt_a ∧ dt_b.
    pub fn basis(n: usize, a: usize, b: usize) -> Self {
        let mut coeffs = vec![0.0; b2(n)];
        if let Some(i) = pair_index(n, a, b) {
            coeffs[i] = 1.0;
        }
        Self { n, coeffs }
    }

    /// The real form (i/2) Σ H dz ∧ dz̄.
    pub fn from_hermitian(h: &HermitianForm) -> Self {
        Self {
            n: h.n(),
            coeffs: recombine(h, C64::new(0.0, 0.0)),
        }
    }
}

/// Exact periods of a constant form: the unit torus makes them the coefficients.
pub fn period_coordinates(form: &ConstantForm) -> ClassCoordinates {
    ClassCoordinates(form.coeffs.clone())
}

/// Pure-type pieces of a real constant 2-form: (i/2) Σ H dz_j∧dz̄_l plus
/// A dz̄₁∧dz̄₂ plus its conjugate conj(A) dz₁∧dz₂.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeSplit {
    pub h11: HermitianForm,
    pub a02: C64,
}

impl TypeSplit {
    pub fn a20(&self) -> C64 {
        self.a02.conj()
    }
}

pub fn decompose(n: usize, coeffs: &[f64]) -> TypeSplit {
    if n == 1 {
        return TypeSplit {
            h11: HermitianForm::diagonal(&[coeffs[0]]),
            a02: C64::new(0.0, 0.0),
        };
    }
    let f = |a, b| coeffs[pair_index(2, a, b).unwrap()];
    // dx₁∧dx₂ contributes ¼ dz̄₁∧dz̄₂, dy₁∧dy₂ −¼, dx₁∧dy₂ and dy₁∧dx₂ each i/4.
    let a02 = C64::new(
        0.25 * (f(0, 2) - f(1, 3)),
        0.25 * (f(0, 3) + f(1, 2)),
    );
    let h12 = C64::new(0.5 * (f(0, 3) - f(1, 2)), -0.5 * (f(0, 2) + f(1, 3)));
    TypeSplit {
        h11: HermitianForm::two(f(0, 1), f(2, 3), h12),
        a02,
    }
}

/// Real coefficients of (i/2)ΣH dz∧dz̄ + 2 Re(A dz̄₁∧dz̄₂).
pub fn recombine(h: &HermitianForm, a02: C64) -> Vec<f64> {
    if h.n() == 1 {
        return vec![h.get(0, 0).re];
    }
    let h12 = h.get(0, 1);
    let (p, q) = (a02.re, a02.im);
    // order: 01, 02, 03, 12, 13, 23
    vec![
        h.get(0, 0).re,
        -h12.im + 2.0 * p,
        h12.re + 2.0 * q,
        -h12.re + 2.0 * q,
        -h12.im - 2.0 * p,
        h.get(1, 1).re,
    ]
}

/// Periods of a Hermitian form viewed as a real class.
pub fn class_of(h: &HermitianForm) -> ClassCoordinates {
    ClassCoordinates(recombine(h, C64::new(0.0, 0.0)))
}

/// Pfaffian of the integer flux matrix: ∫ α_k^n / n!, the Riemann–Roch count.
pub fn pfaffian(m: &[i64]) -> i64 {
    match m.len() {
        1 => m[0],
        _ => m[0] * m[5] - m[1] * m[4] + m[2] * m[3],
    }
}

pub fn pfaffian_real(c: &[f64]) -> f64 {
    match c.len() {
        1 => c[0],
        _ => c[0] * c[5] - c[1] * c[4] + c[2] * c[3],
    }
}

/// One element α_k of the approximating sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralApproximant {
    pub k: u64,
    pub m: Vec<i64>,
    pub parts: TypeSplit,
    /// sup over periods of |m − k c|
    pub err_total: f64,
    /// |α_k^{0,2}| coefficient
    pub err_02: f64,
}

impl IntegralApproximant {
    pub fn n(&self) -> usize {
        if self.m.len() == 1 {
            1
        } else {
            2
        }
    }

    pub fn flux(&self) -> Vec<f64> {
        self.m.iter().map(|&v| v as f64).collect()
    }

    pub fn pfaffian(&self) -> i64 {
        pfaffian(&self.m)
    }

    pub fn is_integrable(&self) -> bool {
        self.parts.a02.norm() == 0.0
    }
}

/// The constant form with integer periods m, split by type, with errors against k·c.
pub fn assemble_alpha_k(m: &[i64], k: u64, c: &ClassCoordinates) -> IntegralApproximant {
    let n = if m.len() == 1 { 1 } else { 2 };
    let coeffs: Vec<f64> = m.iter().map(|&v| v as f64).collect();
    let parts = decompose(n, &coeffs);
    let err_total = coeffs
        .iter()
        .zip(c.0.iter())
        .map(|(mv, cv)| (mv - k as f64 * cv).abs())
        .fold(0.0, f64::max);
    IntegralApproximant {
        k,
        m: m.to_vec(),
        err_02: parts.a02.norm(),
        parts,
        err_total,
    }
}

/// Outcome of the Dirichlet scan.
#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    Found(Vec<IntegralApproximant>),
    /// No k up to k_max qualified.
    IncreaseKMax(u64),
}

impl Selection {
    pub fn into_vec(self) -> Vec<IntegralApproximant> {
        match self {
            Selection::Found(v) => v,
            Selection::IncreaseKMax(_) => Vec::new(),
        }
    }
}

/// Scans k = 1..=k_max for m = round(k c) + offset within C/k^{1/b₂} of k c.
/// Ties round to even.
pub fn dirichlet_select(c: &ClassCoordinates, k_max: u64, bound: f64, offset: &[i64]) -> Selection {
    let b = c.0.len() as f64;
    let found: Vec<IntegralApproximant> = (1..=k_max)
        .filter_map(|k| {
            let m: Vec<i64> = c
                .0
                .iter()
                .enumerate()
                .map(|(i, &v)| (k as f64 * v).round_ties_even() as i64 + offset.get(i).copied().unwrap_or(0))
                .collect();
            let approx = assemble_alpha_k(&m, k, c);
            (approx.err_total <= bound / (k as f64).powf(1.0 / b)).then_some(approx)
        })
        .collect();
    if found.is_empty() {
        Selection::IncreaseKMax(k_max)
    } else {
        Selection::Found(found)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub max_total_ratio: f64,
    pub max_02_ratio: f64,
    pub count: usize,
}

/// Checks err·k^{1/b₂} ≤ C for both error kinds on every approximant.
pub fn verify_bounds(approximants: &[IntegralApproximant], bound: f64) -> Result<BoundReport> {
    let mut report = BoundReport {
        max_total_ratio: 0.0,
        max_02_ratio: 0.0,
        count: approximants.len(),
    };
    for a in approximants {
        let scale = (a.k as f64).powf(1.0 / a.m.len() as f64);
        let total = a.err_total * scale;
        let pure = a.err_02 * scale;
        if total > bound {
            return Err(Error::Bound {
                k: a.k,
                what: "total",
                ratio: total,
                limit: bound,
            });
        }
        if pure > bound {
            return Err(Error::Bound {
                k: a.k,
                what: "(0,2)",
                ratio: pure,
                limit: bound,
            });
        }
        report.max_total_ratio = report.max_total_ratio.max(total);
        report.max_02_ratio = report.max_02_ratio.max(pure);
    }
    Ok(report)
}

/// Default transcendental classes: the golden-ratio conjugate for n = 1, and
/// for n = 2 the Hermitian form with diagonal ((√5−1)/2, √2−1) and real
/// off-diagonal (√3−1)/4.
pub fn default_class(n: usize) -> ClassCoordinates {
    let c1 = (5f64.sqrt() - 1.0) / 2.0;
    if n == 1 {
        return ClassCoordinates(vec![c1]);
    }
    let c2 = 2f64.sqrt() - 1.0;
    let h = (3f64.sqrt() - 1.0) / 4.0;
    class_of(&HermitianForm::two(c1, c2, C64::new(h, 0.0)))
}

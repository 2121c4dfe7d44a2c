//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; list values are comma separated.
//! Every key is optional and defaults depend on `n`, which is read first.
//!
//! | key           | meaning                                                  |
//! |---------------|----------------------------------------------------------|
//! | `n`           | complex dimension, 1 or 2                                |
//! | `grid`        | points per axis N                                        |
//! | `class`       | diagonal of H: c₁ (n=1) or c₁, c₂ (n=2)                 |
//! | `offdiag`     | H₁₂ as `re, im` (n=2)                                    |
//! | `dirichlet_c` | constant of the Dirichlet selection                      |
//! | `type_offset` | integer shift added to round(k c), one entry per pair    |
//! | `threshold_c` | C in the ℋ_k cut C/k^{1+ε}                               |
//! | `epsilon`     | ε in (0, 2/b₂)                                           |
//! | `delta0`      | δ₀; default half the smallest eigenvalue of α            |
//! | `eps0`        | ε₀ in (0, δ₀); default δ₀/2                              |
//! | `g_disc`      | discretization derating of the gap window                |
//! | `k_min`, `k_max` | range searched for S                                  |
//! | `tol`         | eigensolver relative residual                            |
//! | `extra`       | eigenpairs computed beyond the expected cluster          |
//! | `centers`     | number of random peak centres                            |
//! | `r1`, `r2`    | cut-off radii of peak sections                           |
//! | `slack`       | factor on 4/(δ₀k) in the correction bound                |
//! | `ball`        | r in B(x, r/√k)                                          |
//! | `c_peak`      | constant in ε_k for the peak-value statements            |
//! | `pairs`, `sites` | separation pairs and immersion sites per k            |
//! | `seed`        | master seed                                              |
//! | `workers`     | k values processed concurrently                          |
//! | `name`        | run directory name; default derived from the hash        |

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use sha2::{Digest, Sha256};

use crate::cohomology::{b2, default_class, ClassCoordinates};
use crate::error::{Error, Result};
use crate::geometry::{alpha_eigenvalues, HermitianForm};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub grid: usize,
    pub class: Vec<f64>,
    pub offdiag: C64,
    pub dirichlet_c: f64,
    pub type_offset: Vec<i64>,
    pub threshold_c: f64,
    pub epsilon: f64,
    pub delta0: f64,
    pub eps0: f64,
    pub g_disc: f64,
    pub k_min: u64,
    pub k_max: u64,
    pub tol: f64,
    pub extra: usize,
    pub centers: usize,
    pub r1: f64,
    pub r2: f64,
    pub slack: f64,
    pub ball: f64,
    pub c_peak: f64,
    pub pairs: usize,
    pub sites: usize,
    pub seed: u64,
    pub workers: usize,
    pub name: Option<String>,
}

impl ExperimentConfig {
    /// Defaults of the reference experiments.
    pub fn defaults(n: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::Dimension(n));
        }
        let h = default_class(n).hermitian();
        let class: Vec<f64> = (0..n).map(|j| h.get(j, j).re).collect();
        let offdiag = if n == 2 { h.get(0, 1) } else { C64::new(0.0, 0.0) };
        let delta0 = 0.5 * alpha_eigenvalues(&h, &HermitianForm::identity(n))?[0];
        Ok(Self {
            n,
            grid: if n == 1 { 64 } else { 12 },
            class,
            offdiag,
            dirichlet_c: if n == 1 { 1.0 } else { 2.0 },
            type_offset: if n == 1 { vec![0] } else { vec![0, 1, 0, 0, 0, 0] },
            threshold_c: if n == 1 { 1.0 } else { 10.0 },
            epsilon: 0.9 * 2.0 / b2(n) as f64,
            delta0,
            eps0: 0.5 * delta0,
            g_disc: 0.5,
            k_min: 1,
            k_max: if n == 1 { 40 } else { 8 },
            tol: 1e-9,
            extra: 4,
            centers: 10,
            r1: 0.35,
            r2: 0.49,
            slack: 1.25,
            ball: 1.0,
            c_peak: 1.0,
            pairs: 100,
            sites: 100,
            seed: 20_240_917,
            workers: 1,
            name: None,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        let n = match map.remove("n") {
            Some(v) => parse_one::<usize>("n", &v)?,
            None => 1,
        };
        let mut cfg = Self::defaults(n)?;
        let mut delta0_set = false;
        let mut eps0_set = false;
        for (key, value) in map {
            let v = value.as_str();
            match key.as_str() {
                "grid" => cfg.grid = parse_one("grid", v)?,
                "class" => cfg.class = parse_list("class", v)?,
                "offdiag" => {
                    let p: Vec<f64> = parse_list("offdiag", v)?;
                    if p.len() != 2 {
                        return Err(Error::Config("offdiag takes `re, im`".into()));
                    }
                    cfg.offdiag = C64::new(p[0], p[1]);
                }
                "dirichlet_c" => cfg.dirichlet_c = parse_one("dirichlet_c", v)?,
                "type_offset" => cfg.type_offset = parse_list("type_offset", v)?,
                "threshold_c" => cfg.threshold_c = parse_one("threshold_c", v)?,
                "epsilon" => cfg.epsilon = parse_one("epsilon", v)?,
                "delta0" => {
                    cfg.delta0 = parse_one("delta0", v)?;
                    delta0_set = true;
                }
                "eps0" => {
                    cfg.eps0 = parse_one("eps0", v)?;
                    eps0_set = true;
                }
                "g_disc" => cfg.g_disc = parse_one("g_disc", v)?,
                "k_min" => cfg.k_min = parse_one("k_min", v)?,
                "k_max" => cfg.k_max = parse_one("k_max", v)?,
                "tol" => cfg.tol = parse_one("tol", v)?,
                "extra" => cfg.extra = parse_one("extra", v)?,
                "centers" => cfg.centers = parse_one("centers", v)?,
                "r1" => cfg.r1 = parse_one("r1", v)?,
                "r2" => cfg.r2 = parse_one("r2", v)?,
                "slack" => cfg.slack = parse_one("slack", v)?,
                "ball" => cfg.ball = parse_one("ball", v)?,
                "c_peak" => cfg.c_peak = parse_one("c_peak", v)?,
                "pairs" => cfg.pairs = parse_one("pairs", v)?,
                "sites" => cfg.sites = parse_one("sites", v)?,
                "seed" => cfg.seed = parse_one("seed", v)?,
                "workers" => cfg.workers = parse_one("workers", v)?,
                "name" => cfg.name = Some(v.to_string()),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        // δ₀ follows the class unless pinned.
        if !delta0_set {
            cfg.delta0 = 0.5 * alpha_eigenvalues(&cfg.alpha()?, &HermitianForm::identity(n))?[0];
        }
        if !eps0_set {
            cfg.eps0 = 0.5 * cfg.delta0;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The coefficient matrix H of α.
    pub fn alpha(&self) -> Result<HermitianForm> {
        match (self.n, self.class.as_slice()) {
            (1, [c]) => Ok(HermitianForm::diagonal(&[*c])),
            (2, [a, d]) => Ok(HermitianForm::two(*a, *d, self.offdiag)),
            _ => Err(Error::Config(format!(
                "class needs {} entries for n = {}",
                self.n, self.n
            ))),
        }
    }

    pub fn class_coordinates(&self) -> Result<ClassCoordinates> {
        Ok(crate::cohomology::class_of(&self.alpha()?))
    }

    /// Checks everything that can be checked before any compute.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        crate::geometry::TorusGeometry::new(self.n, self.grid)?;
        let alpha = self.alpha()?;
        if !alpha.is_positive() {
            return bad("α must be positive definite".into());
        }
        let limit = 2.0 / b2(self.n) as f64;
        if !(self.epsilon > 0.0 && self.epsilon < limit) {
            return bad(format!("epsilon = {} must lie in (0, {limit})", self.epsilon));
        }
        if self.type_offset.len() != b2(self.n) {
            return bad(format!("type_offset needs {} entries", b2(self.n)));
        }
        if !(self.delta0 > 0.0) {
            return bad("delta0 must be positive".into());
        }
        if !(self.eps0 > 0.0 && self.eps0 < self.delta0) {
            return bad(format!("eps0 = {} must lie in (0, delta0)", self.eps0));
        }
        if !(self.g_disc > 0.0 && self.g_disc <= 1.0) {
            return bad("g_disc must lie in (0, 1]".into());
        }
        if !(0.0 < self.r1 && self.r1 < self.r2 && self.r2 < 0.5) {
            return bad("need 0 < r1 < r2 < 1/2".into());
        }
        for (name, v) in [
            ("dirichlet_c", self.dirichlet_c),
            ("threshold_c", self.threshold_c),
            ("tol", self.tol),
            ("slack", self.slack),
            ("ball", self.ball),
            ("c_peak", self.c_peak),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.k_min == 0 {
            return bad("k_min must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order, 17 significant digits.
    /// `name` and `workers` are left out since they do not change results.
    pub fn canonical(&self) -> String {
        let f = |x: f64| format!("{x:.16e}");
        let list_f = |v: &[f64]| v.iter().map(|&x| f(x)).collect::<Vec<_>>().join(", ");
        let list_i = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("n", self.n.to_string());
        put("grid", self.grid.to_string());
        put("class", list_f(&self.class));
        put("offdiag", format!("{}, {}", f(self.offdiag.re), f(self.offdiag.im)));
        put("dirichlet_c", f(self.dirichlet_c));
        put("type_offset", list_i(&self.type_offset));
        put("threshold_c", f(self.threshold_c));
        put("epsilon", f(self.epsilon));
        put("delta0", f(self.delta0));
        put("eps0", f(self.eps0));
        put("g_disc", f(self.g_disc));
        put("k_min", self.k_min.to_string());
        put("k_max", self.k_max.to_string());
        put("tol", f(self.tol));
        put("extra", self.extra.to_string());
        put("centers", self.centers.to_string());
        put("r1", f(self.r1));
        put("r2", f(self.r2));
        put("slack", f(self.slack));
        put("ball", f(self.ball));
        put("c_peak", f(self.c_peak));
        put("pairs", self.pairs.to_string());
        put("sites", self.sites.to_string());
        put("seed", self.seed.to_string());
        out
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("n{}-N{}-{}", self.n, self.grid, &self.hash()[..12]))
    }
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{key}` from `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|p| parse_one(key, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_scalars() {
        assert_eq!(parse_list::<i64>("flux", "1, -2,3").unwrap(), vec![1, -2, 3]);
        assert!(parse_list::<i64>("flux", "1,,3").is_err());
        assert_eq!(parse_one::<f64>("epsilon", " 0.5 ").unwrap(), 0.5);
        let err = parse_one::<usize>("grid", "-4").unwrap_err().to_string();
        assert!(err.contains("grid"));
    }
}

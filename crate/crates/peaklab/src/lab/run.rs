//! The sweep over S and its artifacts.
//!
//! A run directory holds `config.txt` (canonical form), one JSON record per k
//! under `records/`, and tables assembled from the records:
//!
//! | file               | columns                                                     |
//! |--------------------|-------------------------------------------------------------|
//! | `approximants.csv` | k, m, pfaffian, err_total, err_02                           |
//! | `spectrum.csv`     | k, index, value, residual                                   |
//! | `gap.csv`          | k, dim, pfaffian, threshold, upper, first_above, gap_ratio, pass |
//! | `dimensions.csv`   | k, dim, normalized, target, deviation                       |
//! | `peaks.csv`        | k, center, ratio, bound, value_at_center, deviation, epsilon, ball_sup, ball_mass, pass |
//! | `jets.csv`         | k, center, direction, corrected, uncorrected, pass          |
//! | `embedding.csv`    | k, dim, pairs, separated, min_distance, sites, immersive, min_rank_ratio, pass |
//! | `convergence.csv`  | k, N, norm, value                                           |
//! | `plots/<norm>.dat` | k value                                                     |
//!
//! plus `summary.json` with the fitted slopes. Floats are written with 17
//! significant digits. A record whose config hash matches is never recomputed.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::{fit_rates, top_half, RateFit};
use crate::bundle::build_bundle;
use crate::cohomology::{b2, dirichlet_select, IntegralApproximant};
use crate::embedding::{
    bergman_field, convergence_norms, fs_pullback, orthonormal_basis, separation_and_immersion,
    DistanceTable, EmbeddingVerdict,
};
use crate::error::{Error, Result};
use crate::geometry::TorusGeometry;
use crate::operators::{CovariantOps, OperatorHandle, OperatorKind};
use crate::peaks::{
    jet_generation_check, peak_report, peak_section, JetSpec, JetVerdict, PeakDiagnostics, PeakParams,
    PeakReport,
};
use crate::spectral::{
    build_hk, dimension_asymptotics, lowest_eigenpairs, spectral_gap_certificate, GapVerdict, GrowthReport,
    HkBasis,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum KStatus {
    Done,
    Failed(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeakRow {
    pub center: usize,
    pub diag: PeakDiagnostics,
    pub report: PeakReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetRow {
    pub center: usize,
    pub direction: usize,
    pub verdict: JetVerdict,
}

/// Everything computed for one k.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KRecord {
    pub hash: String,
    pub k: u64,
    pub n: usize,
    pub grid: usize,
    pub m: Vec<i64>,
    pub pfaffian: i64,
    pub err_total: f64,
    pub err_02: f64,
    pub status: KStatus,
    pub spectrum: Option<SpectrumRecord>,
    pub dim: usize,
    pub gap: Option<GapVerdict>,
    pub peaks: Vec<PeakRow>,
    pub jets: Vec<JetRow>,
    pub embedding: Option<EmbeddingVerdict>,
    pub distances: Option<DistanceTable>,
    pub bergman_range: Option<(f64, f64)>,
    pub period_error: Option<f64>,
    pub seconds: f64,
}

impl KRecord {
    fn new(cfg: &ExperimentConfig, a: &IntegralApproximant) -> Self {
        Self {
            hash: cfg.hash(),
            k: a.k,
            n: cfg.n,
            grid: cfg.grid,
            m: a.m.clone(),
            pfaffian: a.pfaffian(),
            err_total: a.err_total,
            err_02: a.err_02,
            status: KStatus::Done,
            spectrum: None,
            dim: 0,
            gap: None,
            peaks: Vec::new(),
            jets: Vec::new(),
            embedding: None,
            distances: None,
            bergman_range: None,
            period_error: None,
            seconds: 0.0,
        }
    }
}

/// Slopes fitted over the top half of S, one per norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub hash: String,
    pub n: usize,
    pub grid: usize,
    pub ks: Vec<u64>,
    pub failed: Vec<u64>,
    pub fit_ks: Vec<u64>,
    pub slopes: Vec<(String, RateFit)>,
    pub growth: Option<GrowthReport>,
}

pub fn record_path(run_dir: &Path, k: u64) -> PathBuf {
    run_dir.join("records").join(format!("k_{k:04}.json"))
}

/// The selected approximants; empty when k_max < k_min.
pub fn approximants(cfg: &ExperimentConfig) -> Result<Vec<IntegralApproximant>> {
    if cfg.k_max < cfg.k_min {
        return Ok(Vec::new());
    }
    let c = cfg.class_coordinates()?;
    Ok(dirichlet_select(&c, cfg.k_max, cfg.dirichlet_c, &cfg.type_offset)
        .into_vec()
        .into_iter()
        .filter(|a| a.k >= cfg.k_min)
        .collect())
}

/// Random peak centres shared by every k.
pub fn peak_centers(cfg: &ExperimentConfig, geom: &TorusGeometry) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.centers).map(|_| rng.random_range(0..geom.sites())).collect()
}

/// Eigenpairs up to just past the threshold, growing the block if the cluster
/// turns out larger than expected.
pub fn spectral_basis(
    cfg: &ExperimentConfig,
    op: &OperatorHandle,
    geom: &TorusGeometry,
    k: u64,
    expected: usize,
) -> Result<(crate::spectral::SpectralSlice, HkBasis)> {
    let limit = geom.sites() / 4;
    let mut count = (expected + cfg.extra).clamp(1, limit.max(1));
    loop {
        let slice = lowest_eigenpairs(op, count, cfg.tol)?;
        match build_hk(&slice, geom, k, cfg.threshold_c, cfg.epsilon) {
            Ok(hk) => return Ok((slice, hk)),
            Err(Error::SliceTooShort { .. }) if count < limit => count = (2 * count).min(limit),
            Err(e) => return Err(e),
        }
    }
}

fn expected_dim(cfg: &ExperimentConfig, a: &IntegralApproximant) -> Result<usize> {
    let vol = cfg.alpha()?.det() * (a.k as f64).powi(cfg.n as i32);
    Ok((a.pfaffian().max(0) as usize).max(vol.round() as usize))
}

/// The full per-k pipeline.
pub fn process_k(cfg: &ExperimentConfig, a: &IntegralApproximant) -> Result<KRecord> {
    let start = Instant::now();
    let mut rec = KRecord::new(cfg, a);
    let k = a.k;
    let geom = TorusGeometry::new(cfg.n, cfg.grid)?;
    let alpha = cfg.alpha()?;
    let bundle = build_bundle(a, &geom)?;
    let ops = Arc::new(CovariantOps::new(&bundle));
    let op = OperatorHandle::new(OperatorKind::LaplacianQ0, Arc::clone(&ops));

    let (slice, hk) = spectral_basis(cfg, &op, &geom, k, expected_dim(cfg, a)?)?;
    rec.dim = hk.dim();
    rec.gap = Some(spectral_gap_certificate(
        &slice,
        k,
        cfg.delta0,
        cfg.eps0,
        cfg.threshold_c,
        cfg.epsilon,
        cfg.g_disc,
    ));
    rec.spectrum = Some(SpectrumRecord {
        values: slice.values.clone(),
        residuals: slice.residuals.clone(),
        iterations: slice.iterations,
    });
    if hk.dim() == 0 {
        rec.seconds = start.elapsed().as_secs_f64();
        return Ok(rec);
    }

    // Peaks use the Gaussian of the bundle's own (1,1) curvature per unit k.
    let local_alpha = a.parts.h11.scale(1.0 / k as f64);
    let params = PeakParams {
        r1: cfg.r1,
        r2: cfg.r2,
        delta0: cfg.delta0,
        slack: cfg.slack,
        ball: cfg.ball,
    };
    for center in peak_centers(cfg, &geom) {
        let ps = peak_section(&bundle, &ops, &hk, &local_alpha, center, &params)?;
        rec.peaks.push(PeakRow {
            center,
            report: peak_report(&ps, cfg.c_peak, b2(cfg.n), cfg.delta0),
            diag: ps.diag,
        });
        for direction in 0..cfg.n {
            let mut multi = vec![0; cfg.n];
            multi[direction] = 1;
            let spec = JetSpec {
                center,
                multi,
                coeff: C64::new(1.0, 0.0),
            };
            rec.jets.push(JetRow {
                center,
                direction,
                verdict: jet_generation_check(&bundle, &ops, &hk, &local_alpha, &spec, &params)?,
            });
        }
    }

    let basis = orthonormal_basis(&hk)?;
    let field = bergman_field(&basis, &alpha, k)?;
    let fs = fs_pullback(&basis, &ops, k)?;
    rec.distances = Some(convergence_norms(&field, &fs, &geom)?);
    let lo = field.bk.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.bk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    rec.bergman_range = Some((lo, hi));
    let periods = field.periods()?;
    let target = cfg.class_coordinates()?;
    rec.period_error = Some(
        periods
            .0
            .iter()
            .zip(&target.0)
            .map(|(p, t)| (p - t).abs())
            .fold(0.0, f64::max),
    );
    rec.embedding = Some(separation_and_immersion(
        &basis,
        &ops,
        k,
        cfg.pairs,
        cfg.sites,
        cfg.seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15),
    )?);
    rec.seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}

fn load_record(path: &Path) -> Result<KRecord> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// One k: reuse a matching record, otherwise compute and persist. Failures
/// are persisted as records too.
fn run_k(cfg: &ExperimentConfig, run_dir: &Path, a: &IntegralApproximant) -> Result<KRecord> {
    let path = record_path(run_dir, a.k);
    if let Ok(rec) = load_record(&path) {
        if rec.hash == cfg.hash() && rec.status == KStatus::Done {
            return Ok(rec);
        }
    }
    let rec = process_k(cfg, a).unwrap_or_else(|e| {
        let mut r = KRecord::new(cfg, a);
        r.status = KStatus::Failed(e.to_string());
        r
    });
    write_json(&path, &rec)?;
    Ok(rec)
}

#[cfg(feature = "parallel")]
fn run_all(cfg: &ExperimentConfig, run_dir: &Path, approx: &[IntegralApproximant]) -> Result<Vec<KRecord>> {
    use rayon::prelude::*;
    if cfg.workers == 1 {
        return approx.iter().map(|a| run_k(cfg, run_dir, a)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| approx.par_iter().map(|a| run_k(cfg, run_dir, a)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_all(cfg: &ExperimentConfig, run_dir: &Path, approx: &[IntegralApproximant]) -> Result<Vec<KRecord>> {
    approx.iter().map(|a| run_k(cfg, run_dir, a)).collect()
}

/// Runs (or resumes) the sweep under `root` and returns the run directory.
pub fn run_pipeline(cfg: &ExperimentConfig, root: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let run_dir = root.join(cfg.run_name());
    std::fs::create_dir_all(run_dir.join("records"))?;
    std::fs::write(run_dir.join("config.txt"), cfg.canonical())?;
    let approx = approximants(cfg)?;
    let records = run_all(cfg, &run_dir, &approx)?;
    write_tables(cfg, &run_dir, &records)?;
    Ok(run_dir)
}

/// Reads every record of a run in k order.
pub fn load_records(run_dir: &Path) -> Result<Vec<KRecord>> {
    let dir = run_dir.join("records");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::Artifact(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut recs: Vec<KRecord> = paths.iter().map(|p| load_record(p)).collect::<Result<_>>()?;
    recs.sort_by_key(|r| r.k);
    Ok(recs)
}

pub fn load_config(run_dir: &Path) -> Result<ExperimentConfig> {
    let path = run_dir.join("config.txt");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn g(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

/// Convergence rows (k, norm, value) of every completed record.
pub fn convergence_rows(records: &[KRecord]) -> Vec<(u64, String, f64)> {
    records
        .iter()
        .filter_map(|r| r.distances.as_ref())
        .flat_map(|d| d.rows().into_iter().map(move |(name, v)| (d.k, name, v)))
        .collect()
}

/// Fits every norm over the top half of the completed k values; norms with
/// non-positive entries there are skipped.
pub fn fit_all(records: &[KRecord]) -> (Vec<u64>, Vec<(String, RateFit)>) {
    let ks: Vec<u64> = records.iter().filter(|r| r.distances.is_some()).map(|r| r.k).collect();
    let fit_ks = top_half(&ks);
    let rows = convergence_rows(records);
    let mut names: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
    names.sort();
    names.dedup();
    let slopes = names
        .into_iter()
        .filter_map(|name| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.1 == name && fit_ks.contains(&r.0))
                .map(|r| (r.0 as f64, r.2))
                .collect();
            fit_rates(&pts).ok().map(|f| (name, f))
        })
        .collect();
    (fit_ks, slopes)
}

pub fn growth(cfg: &ExperimentConfig, records: &[KRecord]) -> Result<Option<GrowthReport>> {
    let dims: Vec<(u64, usize)> = records
        .iter()
        .filter(|r| r.status == KStatus::Done)
        .map(|r| (r.k, r.dim))
        .collect();
    if dims.is_empty() {
        return Ok(None);
    }
    let pf = crate::cohomology::pfaffian_real(&cfg.class_coordinates()?.0);
    Ok(Some(dimension_asymptotics(cfg.n, &dims, pf)))
}

pub fn write_tables(cfg: &ExperimentConfig, run_dir: &Path, records: &[KRecord]) -> Result<()> {
    let mut w = csv_writer(&run_dir.join("approximants.csv"), &["k", "m", "pfaffian", "err_total", "err_02"])?;
    for r in records {
        let m: Vec<String> = r.m.iter().map(|x| x.to_string()).collect();
        w.write_record([r.k.to_string(), m.join(";"), r.pfaffian.to_string(), g(r.err_total), g(r.err_02)])?;
    }
    w.flush()?;

    let mut w = csv_writer(&run_dir.join("spectrum.csv"), &["k", "index", "value", "residual"])?;
    for r in records {
        if let Some(s) = &r.spectrum {
            for (i, (v, res)) in s.values.iter().zip(&s.residuals).enumerate() {
                w.write_record([r.k.to_string(), i.to_string(), g(*v), g(*res)])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv_writer(
        &run_dir.join("gap.csv"),
        &["k", "dim", "pfaffian", "threshold", "upper", "first_above", "gap_ratio", "pass"],
    )?;
    for r in records {
        if let Some(v) = &r.gap {
            w.write_record([
                r.k.to_string(),
                v.dim.to_string(),
                r.pfaffian.to_string(),
                g(v.threshold),
                g(v.upper),
                v.first_above.map(g).unwrap_or_default(),
                g(v.gap_ratio),
                v.pass.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let growth = growth(cfg, records)?;
    let mut w = csv_writer(&run_dir.join("dimensions.csv"), &["k", "dim", "normalized", "target", "deviation"])?;
    if let Some(gr) = &growth {
        let dev = gr.deviations();
        for (i, k) in gr.ks.iter().enumerate() {
            let dim = records.iter().find(|r| r.k == *k).map_or(0, |r| r.dim);
            w.write_record([k.to_string(), dim.to_string(), g(gr.normalized[i]), g(gr.target), g(dev[i])])?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(
        &run_dir.join("peaks.csv"),
        &[
            "k", "center", "ratio", "bound", "value_at_center", "deviation", "epsilon", "ball_sup", "ball_mass", "pass",
        ],
    )?;
    for r in records {
        for p in &r.peaks {
            w.write_record([
                r.k.to_string(),
                p.center.to_string(),
                g(p.diag.ratio),
                g(p.diag.bound),
                g(p.diag.value_at_center),
                g(p.report.value_deviation),
                g(p.report.epsilon),
                g(p.diag.ball_sup),
                g(p.diag.ball_mass),
                p.diag.pass.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(
        &run_dir.join("jets.csv"),
        &["k", "center", "direction", "corrected", "uncorrected", "pass"],
    )?;
    for r in records {
        for j in &r.jets {
            let (c, u) = match j.verdict {
                JetVerdict::Generated { corrected, uncorrected } | JetVerdict::Failed { corrected, uncorrected } => {
                    (corrected, uncorrected)
                }
                JetVerdict::DegenerateInput => (0.0, 0.0),
            };
            w.write_record([
                r.k.to_string(),
                j.center.to_string(),
                j.direction.to_string(),
                g(c),
                g(u),
                j.verdict.passed().to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(
        &run_dir.join("embedding.csv"),
        &["k", "dim", "pairs", "separated", "min_distance", "sites", "immersive", "min_rank_ratio", "pass"],
    )?;
    for r in records {
        if let Some(e) = &r.embedding {
            w.write_record([
                r.k.to_string(),
                e.dim.to_string(),
                e.pairs.to_string(),
                e.separated.to_string(),
                g(e.min_distance),
                e.sites.to_string(),
                e.immersive.to_string(),
                g(e.min_rank_ratio),
                e.pass.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let rows = convergence_rows(records);
    let mut w = csv_writer(&run_dir.join("convergence.csv"), &["k", "N", "norm", "value"])?;
    for (k, name, v) in &rows {
        w.write_record([k.to_string(), cfg.grid.to_string(), name.clone(), g(*v)])?;
    }
    w.flush()?;

    let plots = run_dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    let mut names: Vec<&String> = rows.iter().map(|r| &r.1).collect();
    names.sort();
    names.dedup();
    for name in names {
        let mut text = format!("# k {name}\n");
        for (k, _, v) in rows.iter().filter(|r| &r.1 == name) {
            text.push_str(&format!("{k} {}\n", g(*v)));
        }
        std::fs::write(plots.join(format!("{name}.dat")), text)?;
    }

    let (fit_ks, slopes) = fit_all(records);
    let summary = Summary {
        hash: cfg.hash(),
        n: cfg.n,
        grid: cfg.grid,
        ks: records.iter().map(|r| r.k).collect(),
        failed: records
            .iter()
            .filter(|r| r.status != KStatus::Done)
            .map(|r| r.k)
            .collect(),
        fit_ks,
        slopes,
        growth,
    };
    write_json(&run_dir.join("summary.json"), &summary)
}

//! Browser bindings: Dirichlet tables, Landau spectra and peak-section
//! profiles for n = 1 on small grids.

use std::sync::Arc;

use peaklab::bundle::build_from_flux;
use peaklab::cohomology::{dirichlet_select, ClassCoordinates};
use peaklab::geometry::{HermitianForm, TorusGeometry};
use peaklab::operators::{CovariantOps, OperatorHandle, OperatorKind};
use peaklab::peaks::{peak_section, PeakParams};
use peaklab::spectral::{build_hk, lowest_eigenpairs};
use wasm_bindgen::prelude::*;

fn js(e: peaklab::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Approximants m/k of c with |kc − m| ≤ bound/k, as JSON rows
/// `{"k":…, "m":…, "err":…}`.
#[wasm_bindgen]
pub fn dirichlet_table(c: f64, k_max: u32, bound: f64) -> String {
    let rows: Vec<String> = dirichlet_select(&ClassCoordinates(vec![c]), k_max as u64, bound, &[0])
        .into_vec()
        .into_iter()
        .map(|a| format!("{{\"k\":{},\"m\":{},\"err\":{}}}", a.k, a.m[0], a.err_total))
        .collect();
    format!("[{}]", rows.join(","))
}

/// Lowest `count` eigenvalues of the ∂̄-Laplacian of the flux-m bundle on an
/// N×N grid, divided by 2πm so that Landau levels sit at 0, 1, 2, …
#[wasm_bindgen]
pub fn landau_levels(grid: u32, flux: i32, count: u32) -> Result<Vec<f64>, JsError> {
    let geom = TorusGeometry::new(1, grid as usize).map_err(js)?;
    let bundle = build_from_flux(&geom, &[flux as i64]).map_err(js)?;
    let op = OperatorHandle::new(OperatorKind::LaplacianQ0, Arc::new(CovariantOps::new(&bundle)));
    let slice = lowest_eigenpairs(&op, count as usize, 1e-8).map_err(js)?;
    let unit = 2.0 * std::f64::consts::PI * (flux.unsigned_abs().max(1)) as f64;
    Ok(slice.values.iter().map(|v| v / unit).collect())
}

/// |s_h| on the grid (row-major, x slowest) for the corrected peak section
/// centred at grid point (i, j), for the flux-m bundle read at level k.
#[wasm_bindgen]
pub fn peak_profile(grid: u32, flux: i32, k: u32, i: u32, j: u32) -> Result<Vec<f64>, JsError> {
    let n = grid as usize;
    let k = k.max(1) as u64;
    let geom = TorusGeometry::new(1, n).map_err(js)?;
    let bundle = build_from_flux(&geom, &[flux as i64]).map_err(js)?;
    let ops = Arc::new(CovariantOps::new(&bundle));
    let op = OperatorHandle::new(OperatorKind::LaplacianQ0, Arc::clone(&ops));
    let m = flux.unsigned_abs().max(1) as usize;
    let slice = lowest_eigenpairs(&op, m + 2, 1e-8).map_err(js)?;
    let hk = build_hk(&slice, &geom, k, 1.0, 0.9).map_err(js)?;
    let alpha = HermitianForm::diagonal(&[flux as f64 / k as f64]);
    let params = PeakParams {
        r1: 0.35,
        r2: 0.49,
        delta0: 0.25,
        slack: 1.25,
        ball: 1.0,
    };
    let center = geom.site(&[i as usize % n, j as usize % n]);
    let ps = peak_section(&bundle, &ops, &hk, &alpha, center, &params).map_err(js)?;
    Ok(ps.s_h.data().iter().map(|z| z.norm()).collect())
}

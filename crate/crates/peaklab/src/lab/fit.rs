//! Least-squares rates on log-log axes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// log v = intercept + slope · log k, with standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
    pub points: usize,
}

pub const MIN_POINTS: usize = 4;

/// Fits (k, value) pairs; every value must be positive.
pub fn fit_rates(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::Config(format!(
            "rate fit needs at least {MIN_POINTS} points, got {}",
            points.len()
        )));
    }
    if let Some(&(k, v)) = points.iter().find(|&&(k, v)| !(k > 0.0 && v > 0.0)) {
        return Err(Error::Config(format!("rate fit needs positive data, got ({k}, {v})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Config("rate fit needs at least two distinct k".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let sigma2 = ssr / (m - 2.0);
    let slope_se = (sigma2 / sxx).sqrt();
    let intercept_se = (sigma2 * (1.0 / m + mx * mx / sxx)).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
        residual: (ssr / m).sqrt(),
        points: points.len(),
    })
}

/// The upper half of a sorted k sequence (the larger half when odd).
pub fn top_half(ks: &[u64]) -> Vec<u64> {
    let mut v = ks.to_vec();
    v.sort_unstable();
    v.dedup();
    let skip = v.len() / 2;
    v.split_off(skip)
}

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;
use peaklab::bundle::build_from_flux;
use peaklab::geometry::{l2_inner, l2_norm, TorusGeometry};
use peaklab::operators::{CovariantOps, OperatorHandle, OperatorKind, SectionField};
use peaklab::spectral::{
    build_hk, dense_eigenpairs, dense_eigenvalues, dimension_asymptotics, lobpcg, lowest_eigenpairs, p_k,
    project, spectral_gap_certificate, threshold, Green, LobpcgOptions,
};
use peaklab::Error;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn laplacian(n: usize, grid: usize, flux: &[i64]) -> (TorusGeometry, OperatorHandle) {
    let g = TorusGeometry::new(n, grid).unwrap();
    let ops = Arc::new(CovariantOps::new(&build_from_flux(&g, flux).unwrap()));
    (g, OperatorHandle::new(OperatorKind::LaplacianQ0, ops))
}

#[test]
fn lobpcg_finds_the_bottom_of_a_diagonal_matrix() {
    let d = 60;
    let m = Mat::from_fn(d, d, |i, j| if i == j { C64::new((d - i) as f64 * 0.5, 0.0) } else { C64::new(0.0, 0.0) });
    let opts = LobpcgOptions {
        count: 4,
        tol: 1e-10,
        ..LobpcgOptions::default()
    };
    let s = lobpcg(&m, None, &opts).unwrap();
    for (j, v) in s.values.iter().enumerate() {
        assert!((v - 0.5 * (j + 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn lobpcg_agrees_with_dense_diagonalization() {
    for (n, grid, flux, count) in [(1, 16, vec![3], 10), (2, 8, vec![1, 0, 0, 0, 0, 2], 6)] {
        let (_, op) = laplacian(n, grid, &flux);
        let it = lowest_eigenpairs(&op, count, 1e-10).unwrap();
        let dense = dense_eigenvalues(&op).unwrap();
        for (a, b) in it.values.iter().zip(&dense) {
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "n={n}: {a} vs {b}");
        }
        assert!(it.worst_relative_residual() <= 1e-10);
    }
}

// Constant flux m on the unit torus: Landau levels 2πm·j, each m-fold.
#[test]
fn landau_levels() {
    let m = 3;
    let (_, op) = laplacian(1, 32, &[m]);
    let s = lowest_eigenpairs(&op, 9, 1e-10).unwrap();
    let unit = TAU * m as f64;
    for (j, v) in s.values.iter().enumerate() {
        let level = (j / m as usize) as f64;
        assert!((v - level * unit).abs() < 1e-6 * unit, "eigenvalue {j}: {v}");
    }
}

#[test]
fn hk_construction_checks_its_inputs() {
    let (g, op) = laplacian(1, 16, &[3]);
    let s = lowest_eigenpairs(&op, 6, 1e-10).unwrap();
    assert!(matches!(build_hk(&s, &g, 5, 1.0, 2.5), Err(Error::Config(_))));
    assert!(matches!(build_hk(&s, &g, 5, 1.0, 0.0), Err(Error::Config(_))));
    let short = lowest_eigenpairs(&op, 2, 1e-10).unwrap();
    assert!(matches!(build_hk(&short, &g, 5, 1.0, 0.9), Err(Error::SliceTooShort { .. })));
    let hk = build_hk(&s, &g, 5, 1.0, 0.9).unwrap();
    assert_eq!(hk.dim(), 3);
    assert!((hk.threshold - threshold(5, 1.0, 0.9)).abs() < 1e-15);
    // basis sections are L²-orthonormal
    let secs = hk.sections();
    for (i, a) in secs.iter().enumerate() {
        for (j, b) in secs.iter().enumerate() {
            let ip = l2_inner(&g, a, b).unwrap();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).norm() < 1e-10);
        }
    }
}

#[test]
fn gap_certificate_on_a_fibonacci_level() {
    let (_, op) = laplacian(1, 32, &[5]);
    let s = lowest_eigenpairs(&op, 9, 1e-10).unwrap();
    let delta0 = 0.309;
    let v = spectral_gap_certificate(&s, 8, delta0, 0.5 * delta0, 1.0, 0.9, 0.5);
    assert!(v.pass && v.dim == 5);
    assert!(v.first_above.unwrap() >= 0.5 * delta0 * 8.0);
    assert!(v.gap_ratio > 1e6);
    // a window reaching into the first excited level is violated
    let bad = spectral_gap_certificate(&s, 8, 20.0, 0.0, 1.0, 0.9, 1.0);
    assert!(!bad.pass && bad.offender.is_some());
}

#[test]
fn projection_splits_orthogonally() {
    let (g, op) = laplacian(1, 16, &[3]);
    let s0 = lowest_eigenpairs(&op, 6, 1e-10).unwrap();
    let hk = build_hk(&s0, &g, 5, 1.0, 0.9).unwrap();
    let s = SectionField::noise(&g, 0, 0, 3);
    let (sh, snh) = project(&s, &hk);
    assert!(l2_inner(&g, &sh, &snh).unwrap().norm() < 1e-12 * l2_norm(&g, &s).powi(2));
    let mut sum = sh.clone();
    sum.axpy(C64::new(1.0, 0.0), &snh);
    assert!(l2_norm(&g, &sum.sub(&s)) < 1e-13 * l2_norm(&g, &s));
    let coeffs = hk.coefficients(&sh);
    let mass: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    assert!((mass - l2_norm(&g, &sh).powi(2)).abs() < 1e-10 * mass.max(1.0));
}

#[test]
fn green_operators_agree_and_invert_p() {
    let (g, op) = laplacian(1, 8, &[3]);
    let hk = build_hk(&dense_eigenpairs(&op).unwrap(), &g, 5, 1.0, 0.9).unwrap();
    let dense = Green::dense(&op, &hk).unwrap();
    let it = Green::iterative(&op, &hk, 1e-13);
    for seed in 0..5 {
        let s = SectionField::noise(&g, 0, 0, seed);
        let (_, snh) = project(&s, &hk);
        let ps = p_k(&op, &hk, &s);
        let a = dense.apply(&ps).unwrap();
        let b = it.apply(&ps).unwrap();
        assert!(l2_norm(&g, &a.sub(&snh)) <= 1e-10 * l2_norm(&g, &s));
        assert!(l2_norm(&g, &b.sub(&snh)) <= 1e-9 * l2_norm(&g, &s));
    }
}

#[test]
fn dimension_normalization() {
    let r = dimension_asymptotics(2, &[(7, 11), (8, 14)], 0.2225);
    assert!((r.normalized[0] - 22.0 / 49.0).abs() < 1e-15);
    assert!((r.target - 0.445).abs() < 1e-15);
    assert_eq!(r.running_min, vec![22.0 / 49.0, 28.0 / 64.0]);
    assert!(r.deviations().iter().all(|d| *d < 0.02));
}

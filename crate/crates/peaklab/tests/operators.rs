use std::sync::Arc;

use num_complex::Complex64 as C64;
use peaklab::bundle::{build_from_flux, trivial_bundle};
use peaklab::geometry::{l2_inner, l2_norm, TorusGeometry};
use peaklab::operators::{
    band_limited_noise, dbar, dbar_adjoint, dbar_square_residual, del, del_adjoint, laplacian, mixed_residual,
    random_gauge, CovariantOps, OperatorHandle, OperatorKind, SectionField,
};
use peaklab::cohomology::decompose;
use peaklab::Error;

const PI: f64 = std::f64::consts::PI;
const TAU: f64 = 2.0 * PI;

fn ops(n: usize, grid: usize, flux: &[i64]) -> CovariantOps {
    let g = TorusGeometry::new(n, grid).unwrap();
    CovariantOps::new(&build_from_flux(&g, flux).unwrap())
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

#[test]
fn adjoint_identities_hold_to_rounding() {
    for (n, grid, flux) in [(1, 16, vec![3]), (2, 8, vec![5, 1, 1, -1, 0, 3])] {
        let o = ops(n, grid, &flux);
        let g = o.geometry().clone();
        for (p, q) in [(0, 0), (0, 1), (1, 0)] {
            if n == 1 && q == 1 && p == 0 {
                // (0,1) → (0,2) vanishes on curves; still check the pairing is zero
                let u = SectionField::noise(&g, 0, 1, 2);
                assert_eq!(dbar(&o, &u).unwrap().data().len(), 0);
                continue;
            }
            let f = SectionField::noise(&g, p, q, 1);
            let df = dbar(&o, &f).unwrap();
            let u = SectionField::noise(&g, p, q + 1, 2);
            let lhs = l2_inner(&g, &df, &u).unwrap();
            let rhs = l2_inner(&g, &f, &dbar_adjoint(&o, &u).unwrap()).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "∂̄ ({p},{q}) n={n}: {lhs} vs {rhs}");
        }
        let f = SectionField::noise(&g, 0, 0, 5);
        let v = SectionField::noise(&g, 1, 0, 6);
        let lhs = l2_inner(&g, &del(&o, &f).unwrap(), &v).unwrap();
        let rhs = l2_inner(&g, &f, &del_adjoint(&o, &v).unwrap()).unwrap();
        assert!(rel(lhs, rhs) < 1e-12, "∂ n={n}");
    }
}

#[test]
fn laplacian_is_hermitian_and_nonnegative() {
    let o = Arc::new(ops(1, 8, &[2]));
    for kind in [OperatorKind::LaplacianQ0, OperatorKind::LaplacianQ1, OperatorKind::BoxQ1] {
        let h = OperatorHandle::new(kind, Arc::clone(&o));
        let a = h.assemble();
        let d = h.source_dim();
        for i in 0..d {
            for j in 0..d {
                assert!((a[(i, j)] - a[(j, i)].conj()).norm() < 1e-10, "{kind:?}");
            }
        }
        let x = SectionField::noise(o.geometry(), 0, 0, 9).into_data();
        let x = if d == x.len() { x } else { SectionField::noise(o.geometry(), 0, 1, 9).into_data() };
        let ax = h.apply(&x);
        let q: C64 = x.iter().zip(&ax).map(|(u, v)| u.conj() * v).sum();
        assert!(q.re >= -1e-9 && q.im.abs() < 1e-9 * q.re.max(1.0));
    }
}

// On the trivial bundle e^{2πi(px+qy)} is an eigenvector: ∂̄ acts by πi(p + iq)
// and the Laplacian by 2π²(p² + q²).
#[test]
fn trivial_bundle_fourier_symbols() {
    let g = TorusGeometry::new(1, 16).unwrap();
    let o = CovariantOps::new(&trivial_bundle(&g));
    for (p, q) in [(1i32, 0i32), (2, -3), (-7, 5)] {
        let e: Vec<C64> = (0..g.sites())
            .map(|s| {
                let t = g.point(s);
                C64::from_polar(1.0, TAU * (p as f64 * t[0] + q as f64 * t[1]))
            })
            .collect();
        let f = SectionField::scalar(&g, e.clone()).unwrap();
        let symbol = C64::new(0.0, PI) * C64::new(p as f64, q as f64);
        let df = dbar(&o, &f).unwrap();
        for (x, y) in df.data().iter().zip(&e) {
            assert!((x - symbol * y).norm() < 1e-11);
        }
        let lf = laplacian(&o, &f).unwrap();
        let lam = 2.0 * PI * PI * (p * p + q * q) as f64;
        for (x, y) in lf.data().iter().zip(&e) {
            assert!((x - lam * y).norm() < 1e-9);
        }
    }
}

#[test]
fn derivatives_are_gauge_covariant() {
    let g = TorusGeometry::new(2, 8).unwrap();
    let b = build_from_flux(&g, &[5, 1, 1, -1, 0, 3]).unwrap();
    let chi = random_gauge(&g, 11);
    let (o, og) = (CovariantOps::new(&b), CovariantOps::new(&b.gauge_transform(&chi)));
    let f = SectionField::noise(&g, 0, 0, 4);
    let lhs = dbar(&og, &f.gauge(&chi)).unwrap();
    let rhs = dbar(&o, &f).unwrap().gauge(&chi);
    assert!(l2_norm(&g, &lhs.sub(&rhs)) < 1e-11 * l2_norm(&g, &rhs));
    let lhs = laplacian(&og, &f.gauge(&chi)).unwrap();
    let rhs = laplacian(&o, &f).unwrap().gauge(&chi);
    assert!(l2_norm(&g, &lhs.sub(&rhs)) < 1e-11 * l2_norm(&g, &rhs));
}

#[test]
fn dbar_squares_to_zero_on_decoupled_planes() {
    let o = ops(2, 8, &[5, 0, 0, 0, 0, 3]);
    let s = SectionField::noise(o.geometry(), 0, 0, 3);
    let r = dbar_square_residual(&o, &s, C64::new(0.0, 0.0)).unwrap();
    assert!(l2_norm(o.geometry(), &r) < 1e-10 * l2_norm(o.geometry(), &s));
}

#[test]
fn structure_identities_on_resolved_sections() {
    let m = [5, 1, 1, -1, 0, 3];
    let o = ops(2, 12, &m);
    let g = o.geometry().clone();
    let parts = decompose(2, &m.map(|v| v as f64));
    let s = band_limited_noise(&o, 0, 0, TAU, 1);
    let s_norm = l2_norm(&g, &s);
    let r = dbar_square_residual(&o, &s, parts.a02).unwrap();
    assert!(l2_norm(&g, &r) < 5e-2 * s_norm);
    // without the (0,2) term the residual is of order |A|·‖s‖
    let bare = dbar_square_residual(&o, &s, C64::new(0.0, 0.0)).unwrap();
    assert!(l2_norm(&g, &bare) > 0.5 * s_norm);
    let mixed = mixed_residual(&o, &s, &parts.h11).unwrap();
    assert!(l2_norm(&g, &mixed) < 0.1 * s_norm);
}

#[test]
fn degrees_are_checked() {
    let o = ops(1, 8, &[1]);
    let f = SectionField::noise(o.geometry(), 0, 0, 1);
    assert!(matches!(dbar_adjoint(&o, &f), Err(Error::Degree(0))));
    let g = TorusGeometry::new(1, 10).unwrap();
    let other = SectionField::noise(&g, 0, 0, 1);
    assert!(matches!(l2_inner(&g, &f, &other), Err(Error::GeometryMismatch)));
}

#[test]
fn assembled_matrix_matches_application() {
    let o = Arc::new(ops(1, 8, &[3]));
    let h = OperatorHandle::new(OperatorKind::LaplacianQ0, Arc::clone(&o));
    let a = h.assemble();
    let x = SectionField::noise(o.geometry(), 0, 0, 8).into_data();
    let y = h.apply(&x);
    for i in 0..x.len() {
        let row: C64 = (0..x.len()).map(|j| a[(i, j)] * x[j]).sum();
        assert!((row - y[i]).norm() < 1e-10);
    }
    let dir = tempfile::tempdir().unwrap();
    let nnz = h.export_coo(&dir.path().join("a.coo"), 1e-14).unwrap();
    assert!(nnz > 0 && nnz <= x.len() * x.len());
}

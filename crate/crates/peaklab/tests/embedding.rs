use std::sync::Arc;

use num_complex::Complex64 as C64;
use peaklab::bundle::build_from_flux;
use peaklab::cohomology::default_class;
use peaklab::embedding::{
    bergman_field, convergence_norms, differential_rank_ratio, fs_pullback, kodaira_sample, orthonormal_basis,
    random_unitary, separation_and_immersion, tian_basis, SectionBasis,
};
use peaklab::geometry::{HermitianForm, TorusGeometry};
use peaklab::operators::{random_gauge, CovariantOps, OperatorHandle, OperatorKind};
use peaklab::spectral::{build_hk, lowest_eigenpairs};
use peaklab::Error;

fn level(grid: usize, k: u64, m: i64) -> (SectionBasis, Arc<CovariantOps>) {
    let g = TorusGeometry::new(1, grid).unwrap();
    let ops = Arc::new(CovariantOps::new(&build_from_flux(&g, &[m]).unwrap()));
    let op = OperatorHandle::new(OperatorKind::LaplacianQ0, Arc::clone(&ops));
    let slice = lowest_eigenpairs(&op, m as usize + 4, 1e-10).unwrap();
    let hk = build_hk(&slice, &g, k, 1.0, 0.9).unwrap();
    (orthonormal_basis(&hk).unwrap(), ops)
}

fn alpha() -> HermitianForm {
    default_class(1).hermitian()
}

fn assert_identity(b: &SectionBasis, tol: f64) {
    let g = b.gram().unwrap();
    for i in 0..b.dim() {
        for j in 0..b.dim() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g[(i, j)] - C64::new(want, 0.0)).norm() < tol);
        }
    }
}

#[test]
fn recombination_keeps_the_span_and_the_bergman_data() {
    let (b, ops) = level(32, 13, 8);
    assert_eq!(b.dim(), 8);
    assert_identity(&b, 1e-12);
    let r = b.recombine(&random_unitary(8, 3));
    assert_identity(&r, 1e-12);
    assert!(b.projector_distance(&r).unwrap() <= 1e-10);
    let (f0, f1) = (bergman_field(&b, &alpha(), 13).unwrap(), bergman_field(&r, &alpha(), 13).unwrap());
    for (x, y) in f0.bk.iter().zip(&f1.bk) {
        assert!((x - y).abs() <= 1e-12 * x);
    }
    let (p0, p1) = (fs_pullback(&b, &ops, 13).unwrap(), fs_pullback(&r, &ops, 13).unwrap());
    for (x, y) in p0.real.iter().zip(&p1.real) {
        assert!((x[0] - y[0]).abs() <= 1e-10);
    }
}

#[test]
fn bergman_density_is_gauge_invariant() {
    let (b, _) = level(32, 13, 8);
    let chi = random_gauge(b.geometry(), 2);
    let (f0, f1) = (bergman_field(&b, &alpha(), 13).unwrap(), bergman_field(&b.gauge(&chi), &alpha(), 13).unwrap());
    for (x, y) in f0.bk.iter().zip(&f1.bk) {
        assert!((x - y).abs() <= 1e-13 * x);
    }
}

#[test]
fn tk_has_the_class_periods_and_is_positive() {
    let (b, ops) = level(32, 13, 8);
    let f = bergman_field(&b, &alpha(), 13).unwrap();
    let p = f.periods().unwrap();
    assert!((p.0[0] - default_class(1).0[0]).abs() < 1e-12);
    assert!(f.min_eigenvalue().unwrap() > 0.0);
    let fs = fs_pullback(&b, &ops, 13).unwrap();
    let d = convergence_norms(&f, &fs, b.geometry()).unwrap();
    assert!(d.tk_alpha[0] < 1e-3, "{d:?}");
    assert!(d.fs_tk[0] < 2e-2, "{d:?}");
    assert_eq!(d.fs02, [0.0; 3]);
}

#[test]
fn tian_basis_is_adapted_to_its_point() {
    let (b, ops) = level(32, 13, 8);
    let x = b.geometry().site(&[7, 21]);
    let t = tian_basis(&b, &ops, x).unwrap();
    assert_identity(&t.basis, 1e-12);
    let secs = t.basis.sections();
    let scale: f64 = secs.iter().map(|s| s.data()[x].norm()).fold(0.0, f64::max);
    assert!(secs[0].data()[x].norm() > 0.0);
    for s in &secs[1..] {
        assert!(s.data()[x].norm() <= 1e-12 * scale);
    }
    let d1 = ops.del_j(0, secs[1].data())[x];
    assert!(d1.norm() > 1e-3 * scale);
    for s in &secs[2..] {
        assert!(ops.del_j(0, s.data())[x].norm() <= 1e-10 * d1.norm());
    }
}

#[test]
fn golden_level_embeds() {
    let (b, ops) = level(32, 13, 8);
    let v = separation_and_immersion(&b, &ops, 13, 50, 50, 9).unwrap();
    assert!(v.pass && v.separated == 50 && v.immersive == 50, "{v:?}");
    assert!(differential_rank_ratio(&b, &ops, 5).unwrap() > 1e-8);
    let (x, y) = (kodaira_sample(&b, 3).unwrap(), kodaira_sample(&b, 900).unwrap());
    assert!(x.distance(&x) < 1e-7);
    assert!((x.distance(&y) - y.distance(&x)).abs() < 1e-14);
}

// With one section the Kodaira map is constant: nothing is separated.
#[test]
fn a_single_section_does_not_embed() {
    let (b, ops) = level(16, 2, 1);
    assert_eq!(b.dim(), 1);
    let v = separation_and_immersion(&b, &ops, 2, 20, 20, 1).unwrap();
    assert!(!v.pass && v.separated == 0);
}

#[test]
fn empty_input_is_rejected() {
    let g = TorusGeometry::new(1, 8).unwrap();
    assert!(matches!(SectionBasis::orthonormalize(&g, &[]), Err(Error::EmptyBasis)));
}

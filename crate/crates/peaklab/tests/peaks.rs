use std::sync::Arc;

use num_complex::Complex64 as C64;
use peaklab::bundle::{build_from_flux, LatticeBundle};
use peaklab::geometry::{HermitianForm, TorusGeometry};
use peaklab::operators::CovariantOps;
use peaklab::peaks::{
    chart_frame, cutoff, epsilon_k, gaussian_section, jet_generation_check, jet_section, peak_report, peak_section,
    JetSpec, JetVerdict, PeakParams,
};
use peaklab::spectral::{build_hk, lowest_eigenpairs, HkBasis};
use peaklab::Error;

const PARAMS: PeakParams = PeakParams {
    r1: 0.35,
    r2: 0.49,
    delta0: 0.309,
    slack: 1.25,
    ball: 1.0,
};

struct Level {
    bundle: LatticeBundle,
    ops: Arc<CovariantOps>,
    hk: HkBasis,
    alpha: HermitianForm,
}

// k = 13 on the golden class: m = 8 and α read at level k is m/k.
fn level() -> Level {
    let g = TorusGeometry::new(1, 64).unwrap();
    let bundle = build_from_flux(&g, &[8]).unwrap();
    let ops = Arc::new(CovariantOps::new(&bundle));
    let op = peaklab::operators::OperatorHandle::new(peaklab::operators::OperatorKind::LaplacianQ0, Arc::clone(&ops));
    let slice = lowest_eigenpairs(&op, 12, 1e-9).unwrap();
    let hk = build_hk(&slice, &g, 13, 1.0, 0.9).unwrap();
    Level {
        bundle,
        ops,
        hk,
        alpha: HermitianForm::diagonal(&[8.0 / 13.0]),
    }
}

#[test]
fn cutoff_profile_and_radius_checks() {
    let g = TorusGeometry::new(1, 32).unwrap();
    let x = g.site(&[4, 4]);
    let t = cutoff(&g, x, 0.2, 0.4).unwrap();
    assert_eq!(t[x], 1.0);
    assert_eq!(t[g.site(&[4, 10])], 1.0); // r = 0.1875
    assert_eq!(t[g.site(&[20, 4])], 0.0); // r = 0.5
    assert!(t.iter().all(|v| (0.0..=1.0).contains(v)));
    let mid = t[g.site(&[4, 13])]; // r = 0.28125
    assert!(mid > 0.0 && mid < 1.0);
    assert!(matches!(cutoff(&g, x, 0.3, 0.5), Err(Error::Chart(_))));
    assert!(matches!(cutoff(&g, x, 0.3, 0.2), Err(Error::Config(_))));
}

#[test]
fn local_gaussians_peak_at_one() {
    let g = TorusGeometry::new(1, 32).unwrap();
    let x = g.site(&[10, 3]);
    let a = HermitianForm::diagonal(&[0.6]);
    let u = gaussian_section(&g, x, 13.0, &a, 0.45).unwrap();
    assert_eq!(u.field.data()[x], C64::new(1.0, 0.0));
    assert_eq!(u.field.data()[g.site(&[26, 3])], C64::new(0.0, 0.0));
    // |u| = exp(−kπ H |z|²/2)
    let y = g.site(&[12, 3]);
    let r2 = (2.0 / 32.0f64).powi(2);
    let want = (-0.5 * 13.0 * std::f64::consts::PI * 0.6 * r2).exp();
    assert!((u.field.data()[y].norm() - want).abs() < 1e-14);
    let bad = JetSpec {
        center: x,
        multi: vec![3],
        coeff: C64::new(1.0, 0.0),
    };
    assert!(matches!(jet_section(&g, &bad, 13.0, &a, 0.45), Err(Error::Order(3))));
}

#[test]
fn chart_frame_is_trivial_at_the_centre() {
    let g = TorusGeometry::new(2, 8).unwrap();
    let b = build_from_flux(&g, &[5, 1, 1, -1, 0, 3]).unwrap();
    let x = g.site(&[1, 2, 3, 4]);
    assert_eq!(chart_frame(&b, x, x), C64::new(1.0, 0.0));
    assert!((chart_frame(&b, x, g.site(&[2, 3, 3, 5])).norm() - 1.0).abs() < 1e-15);
}

#[test]
fn corrected_peak_meets_its_bounds() {
    let l = level();
    assert_eq!(l.hk.dim(), 8);
    let g = l.bundle.geometry().clone();
    for center in [0, g.site(&[17, 40]), g.site(&[63, 5])] {
        let ps = peak_section(&l.bundle, &l.ops, &l.hk, &l.alpha, center, &PARAMS).unwrap();
        let d = &ps.diag;
        assert!(d.ratio <= d.bound, "ratio {} bound {}", d.ratio, d.bound);
        assert!((d.bound - 1.25 * 4.0 / (0.309 * 13.0)).abs() < 1e-12);
        let r = peak_report(&ps, 1.0, 1, 0.309);
        assert!(r.value_ok && r.value_deviation <= 0.1, "{r:?}");
        assert!((r.epsilon - epsilon_k(1.0, 13, 1, 0.309)).abs() < 1e-15);
    }
}

#[test]
fn first_jets_survive_the_correction() {
    let l = level();
    let center = l.bundle.geometry().site(&[20, 33]);
    let spec = JetSpec {
        center,
        multi: vec![1],
        coeff: C64::new(1.0, 0.0),
    };
    let v = jet_generation_check(&l.bundle, &l.ops, &l.hk, &l.alpha, &spec, &PARAMS).unwrap();
    match v {
        JetVerdict::Generated { corrected, uncorrected } => assert!(corrected >= 0.5 * uncorrected),
        other => panic!("{other:?}"),
    }
    let zero = JetSpec {
        coeff: C64::new(0.0, 0.0),
        ..spec.clone()
    };
    assert_eq!(
        jet_generation_check(&l.bundle, &l.ops, &l.hk, &l.alpha, &zero, &PARAMS).unwrap(),
        JetVerdict::DegenerateInput
    );
    let second = JetSpec { multi: vec![2], ..spec };
    assert!(matches!(
        jet_generation_check(&l.bundle, &l.ops, &l.hk, &l.alpha, &second, &PARAMS),
        Err(Error::Order(2))
    ));
}

#[test]
fn epsilon_schedule() {
    let e = epsilon_k(1.0, 16, 1, 0.25);
    assert!((e - (16f64.powf(-4.0) + 1.0)).abs() < 1e-15);
}

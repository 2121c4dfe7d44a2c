use num_complex::Complex64 as C64;
use peaklab::cohomology::{
    assemble_alpha_k, b2, class_of, decompose, default_class, dirichlet_select, pairs, pfaffian, recombine,
    verify_bounds, ConstantForm, Selection,
};
use peaklab::geometry::HermitianForm;
use proptest::prelude::*;

#[test]
fn plane_order_and_betti_numbers() {
    assert_eq!(pairs(1), vec![(0, 1)]);
    assert_eq!(pairs(2), vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    assert_eq!((b2(1), b2(2)), (1, 6));
}

// Pf(M)² = det(M) for the skew matrix with entries M_ab = m_ab.
fn skew_det(m: &[i64]) -> i64 {
    let mut a = [[0i64; 4]; 4];
    for (i, &(p, q)) in pairs(2).iter().enumerate() {
        a[p][q] = m[i];
        a[q][p] = -m[i];
    }
    let minor = |r: usize, c: usize| -> i64 {
        let idx: Vec<usize> = (0..4).filter(|&x| x != r).collect();
        let jdx: Vec<usize> = (0..4).filter(|&x| x != c).collect();
        let b = |i: usize, j: usize| a[idx[i]][jdx[j]];
        b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
            + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0))
    };
    (0..4).map(|c| if c % 2 == 0 { a[0][c] * minor(0, c) } else { -a[0][c] * minor(0, c) }).sum()
}

proptest! {
    #[test]
    fn pfaffian_squares_to_the_determinant(m in prop::collection::vec(-9i64..10, 6)) {
        prop_assert_eq!(pfaffian(&m).pow(2), skew_det(&m));
    }

    #[test]
    fn type_split_round_trips(c in prop::collection::vec(-5.0..5.0f64, 6)) {
        let t = decompose(2, &c);
        let back = recombine(&t.h11, t.a02);
        for (x, y) in c.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(t.a20(), t.a02.conj());
    }

    #[test]
    fn hermitian_classes_have_no_02_part(a in -3.0..3.0f64, d in -3.0..3.0f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let h = HermitianForm::two(a, d, C64::new(re, im));
        let t = decompose(2, &class_of(&h).0);
        prop_assert!(t.a02.norm() < 1e-14);
        for j in 0..2 {
            for l in 0..2 {
                prop_assert!((t.h11.get(j, l) - h.get(j, l)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn basis_forms_split_as_expected() {
    // dx₁∧dx₂ is purely of type (2,0)+(0,2) with A = ¼.
    let f = ConstantForm::basis(2, 0, 2);
    let t = decompose(2, &f.coeffs);
    assert!((t.a02 - C64::new(0.25, 0.0)).norm() < 1e-15);
    // dx₁∧dy₁ is (i/2)dz₁∧dz̄₁.
    let t = decompose(2, &ConstantForm::basis(2, 0, 1).coeffs);
    assert!((t.h11.get(0, 0) - C64::new(1.0, 0.0)).norm() < 1e-15 && t.a02.norm() == 0.0);
}

// The best approximations to the golden-ratio conjugate are ratios of Fibonacci numbers.
#[test]
fn golden_class_selects_fibonacci_levels() {
    let c = default_class(1);
    let sel = dirichlet_select(&c, 40, 1.0, &[0]).into_vec();
    let ks: Vec<u64> = sel.iter().map(|a| a.k).collect();
    let ms: Vec<i64> = sel.iter().map(|a| a.m[0]).collect();
    assert_eq!(ks, vec![1, 2, 3, 5, 8, 13, 21, 34]);
    assert_eq!(ms, vec![1, 1, 2, 3, 5, 8, 13, 21]);
    for a in &sel {
        assert!(a.is_integrable() && a.pfaffian() == a.m[0]);
        assert!(a.err_total * a.k as f64 <= 1.0);
    }
    assert_eq!(verify_bounds(&sel, 1.0).unwrap().count, 8);
}

#[test]
fn two_dimensional_reference_class_is_not_integrable() {
    let c = default_class(2);
    let sel = dirichlet_select(&c, 8, 2.0, &[0, 1, 0, 0, 0, 0]).into_vec();
    let ks: Vec<u64> = sel.iter().map(|a| a.k).collect();
    assert_eq!(ks, (1..=8).collect::<Vec<_>>());
    let pf: Vec<i64> = sel.iter().map(|a| a.pfaffian()).collect();
    assert_eq!(pf, vec![0, 1, 1, 3, 5, 7, 11, 14]);
    for a in &sel {
        assert!((a.err_02 - 0.25).abs() < 1e-15);
    }
    let report = verify_bounds(&sel, 2.0).unwrap();
    assert!(report.max_total_ratio <= 2.0);
    assert!(verify_bounds(&sel, 0.1).is_err());
}

#[test]
fn empty_scan_asks_for_a_larger_k_max() {
    let c = default_class(1);
    assert_eq!(dirichlet_select(&c, 3, 1e-3, &[0]), Selection::IncreaseKMax(3));
}

#[test]
fn assembled_errors_are_measured_against_kc() {
    let c = default_class(1);
    let a = assemble_alpha_k(&[8], 13, &c);
    assert!((a.err_total - (8.0 - 13.0 * c.0[0]).abs()).abs() < 1e-15);
    assert_eq!(a.flux(), vec![8.0]);
}

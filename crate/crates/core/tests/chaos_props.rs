mod common;

use common::{element, multi_index, scale};
use num_complex::Complex64;
use proptest::prelude::*;
use wns_core::chaos::{scalar_embed, vage_check, vage_constant, wick_product, weight};
use wns_core::{KondratievElement, TruncationSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn wick_is_commutative(f in element(4, 3, 6), g in element(4, 3, 6)) {
        let fg = wick_product(&f, &g);
        let gf = wick_product(&g, &f);
        prop_assert!(fg.max_abs_diff(&gf) <= 1e-12 * scale(&fg));
    }

    #[test]
    fn wick_is_associative(f in element(4, 2, 4), g in element(4, 2, 4), h in element(4, 2, 4)) {
        let left = wick_product(&wick_product(&f, &g), &h);
        let right = wick_product(&f, &wick_product(&g, &h));
        prop_assert!(left.max_abs_diff(&right) <= 1e-12 * scale(&left));
    }

    #[test]
    fn monomials_add_indices(a in multi_index(4, 3), b in multi_index(4, 3)) {
        let p = wick_product(&KondratievElement::monomial(a.clone(), 1.0), &KondratievElement::monomial(b.clone(), 1.0));
        prop_assert_eq!(p, KondratievElement::monomial(a.add(&b), 1.0));
    }

    #[test]
    fn scalars_are_absorbed(re in -3.0..3.0f64, im in -3.0..3.0f64, f in element(4, 3, 6)) {
        let c = Complex64::new(re, im);
        let lhs = wick_product(&scalar_embed(c), &f);
        prop_assert!(lhs.max_abs_diff(&f.scale(c)) <= 1e-12 * scale(&lhs));
    }

    #[test]
    fn norms_decrease_in_k(f in element(5, 3, 6), k in 1i32..6) {
        prop_assert!(f.hk_norm(k + 1) <= f.hk_norm(k) * (1.0 + 1e-15));
    }

    #[test]
    fn vage_holds_for_gap_two_and_more(h in element(4, 3, 5), f in element(4, 3, 5), ell in 1i32..3, gap in 2i32..5) {
        let spec = TruncationSpec::new(4, 3, ell + gap, ell).unwrap();
        let report = vage_check(&h, &f, &spec).unwrap();
        prop_assert!(report.satisfied, "lhs {} rhs {}", report.lhs, report.rhs);
    }

    #[test]
    fn weight_is_multiplicative(a in multi_index(4, 3), b in multi_index(4, 3), k in -3i32..4) {
        let lhs = weight(&a.add(&b), k).unwrap();
        let rhs = weight(&a, k).unwrap() * weight(&b, k).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(rhs));
    }

    #[test]
    fn element_json_is_lossless(f in element(5, 3, 8)) {
        let text = serde_json::to_string(&f).unwrap();
        let back: KondratievElement = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn vage_constant_gap_two() {
    let a = vage_constant(2).unwrap();
    assert!((a - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
}

#[test]
fn vage_constant_gap_four_matches_partial_product() {
    // Partial product to 10^6 factors; the omitted tail is below 1e-20.
    let mut log = 0.0;
    for j in 1..=1_000_000u32 {
        log -= (-(2.0 * f64::from(j)).powi(-4)).ln_1p();
    }
    let oracle = (0.5 * log).exp();
    assert!((vage_constant(4).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn vage_constant_decreases_with_gap() {
    let values: Vec<f64> = (2..10).map(|g| vage_constant(g).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    assert!(values.iter().all(|&a| a > 1.0));
}

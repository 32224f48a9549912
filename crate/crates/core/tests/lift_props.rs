mod common;

use std::sync::Arc;

use common::{coeff, element, scale};
use num_complex::Complex64;
use proptest::prelude::*;
use wns_core::chaos::{vage_constant, weight, wick_product};
use wns_core::lift::{correlation, cross_correlation, mult_operator, mult_operator_exact};
use wns_core::linalg;
use wns_core::{BasisEnumeration, KondratievElement, ProcessSpec, TruncationSpec};

fn basis(d: u32, w: u32) -> Arc<BasisEnumeration> {
    Arc::new(BasisEnumeration::new(d, w).unwrap())
}

/// `⟨M_a e_α, M_b e_β⟩_{H_k}` from the chaos expansions, entry `(β, α)`.
fn brute_gram(a: &KondratievElement, b: &KondratievElement, basis: &BasisEnumeration, k: i32) -> linalg::CMat {
    let unit = |alpha: &wns_core::MultiIndex| {
        KondratievElement::monomial(alpha.clone(), weight(alpha, k).unwrap().sqrt())
    };
    let n = basis.len();
    linalg::CMat::from_fn(n, n, |row, col| {
        let fa = wick_product(a, &unit(basis.index(col)));
        let fb = wick_product(b, &unit(basis.index(row)));
        fa.terms()
            .map(|(g, c)| c * fb.coeff(g).conj() / weight(g, k).unwrap())
            .sum::<Complex64>()
    })
}

fn unimodular() -> impl Strategy<Value = Complex64> {
    (0.0..std::f64::consts::TAU).prop_map(|t| Complex64::from_polar(1.0, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifting_is_a_homomorphism(x in element(3, 2, 4), y in element(3, 2, 4), k in 1i32..4) {
        let b0 = basis(3, 1);
        let my = mult_operator_exact(&y, &b0, k).unwrap();
        let mx = mult_operator_exact(&x, &my.basis_out, k).unwrap();
        let mxy = mult_operator_exact(&wick_product(&x, &y), &b0, k).unwrap();
        let prod = mx.compose(&my).unwrap();
        prop_assert_eq!(prod.rows(), mxy.rows());
        let defect = linalg::frobenius(&(&prod.matrix - &mxy.matrix));
        prop_assert!(defect <= 1e-12 * linalg::frobenius(&mxy.matrix).max(1.0), "defect {defect}");
    }

    #[test]
    fn symbol_round_trip(x in element(3, 3, 6), k in 1i32..4) {
        let m = mult_operator_exact(&x, &basis(3, 2), k).unwrap();
        let back = m.extract_symbol();
        prop_assert!(back.max_abs_diff(&x) <= 1e-12 * scale(&x));
    }

    #[test]
    fn operator_norm_obeys_vage_bound(x in element(3, 2, 5)) {
        let spec = TruncationSpec::with_defaults(3, 2);
        let m = mult_operator_exact(&x, &basis(3, 2), spec.k).unwrap();
        let bound = vage_constant(i64::from(spec.k - spec.ell)).unwrap() * x.hk_norm(spec.ell);
        prop_assert!(m.op_norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn modulated_gram_matches_expansion(
        rho in element(2, 2, 3),
        lambda in unimodular(),
        n in -3i64..3,
        m in -3i64..3,
    ) {
        let spec = TruncationSpec::with_defaults(2, 2);
        let p = ProcessSpec::Modulated { lambda, rho: rho.clone() };
        let r = correlation(&p, n, m, &spec).unwrap();
        let xn = rho.scale(lambda.powi(n as i32));
        let xm = rho.scale(lambda.powi(m as i32));
        let oracle = brute_gram(&xm, &xn, &basis(2, 2), spec.k);
        let defect = linalg::op_norm(&(&r.matrix - &oracle));
        prop_assert!(defect <= 1e-12 * linalg::op_norm(&oracle).max(1.0), "defect {defect}");
    }

    #[test]
    fn wick_ma_gram_matches_expansion(
        rho in element(3, 1, 3),
        h0 in element(3, 1, 2),
        h1 in element(3, 1, 2),
        lambda in unimodular(),
        n in -2i64..2,
        m in -2i64..2,
    ) {
        let spec = TruncationSpec::with_defaults(3, 1);
        let x = ProcessSpec::Modulated { lambda, rho };
        let p = ProcessSpec::wick_ma(0, vec![h0, h1], x);
        let r = correlation(&p, n, m, &spec).unwrap();
        let oracle = brute_gram(&p.realize(m).unwrap(), &p.realize(n).unwrap(), &basis(3, 1), spec.k);
        let defect = linalg::op_norm(&(&r.matrix - &oracle));
        prop_assert!(defect <= 1e-12 * linalg::op_norm(&oracle).max(1.0), "defect {defect}");
    }

    #[test]
    fn scalar_vacuum_entry_is_classical_product(values in prop::collection::vec(coeff(), 1..6), n in 0i64..6, m in 0i64..6) {
        let spec = TruncationSpec::with_defaults(2, 2);
        let p = ProcessSpec::Deterministic { start: 0, values: values.clone() };
        let r = correlation(&p, n, m, &spec).unwrap();
        let at = |i: i64| values.get(i as usize).copied().unwrap_or_default();
        prop_assert!((r.matrix[(0, 0)] - at(m) * at(n).conj()).norm() <= 1e-14);
    }

    #[test]
    fn cross_with_itself_is_correlation(rho in element(2, 2, 3), lambda in unimodular(), n in -2i64..2, m in -2i64..2) {
        let spec = TruncationSpec::with_defaults(2, 2);
        let p = ProcessSpec::Modulated { lambda, rho };
        let a = correlation(&p, n, m, &spec).unwrap();
        let b = cross_correlation(&p, &p, n, m, &spec).unwrap();
        prop_assert!(linalg::op_norm(&(&a.matrix - &b.matrix)) <= 1e-14 * a.op_norm().max(1.0));
    }
}

#[test]
fn unpadded_square_agrees_on_shared_degrees() {
    // On a single unpadded basis both sides drop exactly the terms above degree W.
    let x = KondratievElement::monomial(wns_core::MultiIndex::unit(1), 1.0);
    let b = basis(1, 2);
    let mx = mult_operator(&x, &b, &b, 1).unwrap();
    let prod = mx.compose(&mx).unwrap();
    let mxx = mult_operator(&wick_product(&x, &x), &b, &b, 1).unwrap();
    assert!(linalg::op_norm(&(&prod.matrix - &mxx.matrix)) < 1e-15);
    assert!((prod.matrix[(2, 0)].re - 0.5).abs() < 1e-15);
    assert_eq!(prod.matrix[(2, 1)], Complex64::default());
}

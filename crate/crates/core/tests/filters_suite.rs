use std::sync::Arc;

use num_complex::Complex64;
use wns_core::chaos::MultiIndex;
use wns_core::filters::{
    apply_filter, causal_wiener, noncausal_wiener, orthogonality_residual, spectral_density, wiener_hopf_residual,
    DensityOptions, FilterOptions, FilterResult, JointModel, RealizedSequence, SpectralPair,
};
use wns_core::harness::{classical_oracle, demos, random, Scenario};
use wns_core::lift::mult_operator_exact;
use wns_core::linalg;
use wns_core::opwiener::{invert_via_factorization, multiply, OperatorLaurent};
use wns_core::{BasisEnumeration, KondratievElement, ProcessSpec};

fn pair(s: &Scenario) -> (JointModel, SpectralPair) {
    let model = s.joint_model().unwrap();
    let sp = model.spectral_pair(&s.truncation, s.lag_band, &s.density).unwrap();
    (model, sp)
}

fn options(s: &Scenario) -> FilterOptions {
    FilterOptions {
        out_band: Some(s.out_band()),
        residual_window: None,
        factor: s.factor.clone(),
    }
}

fn chaos(lead: f64, terms: &[(u32, f64)]) -> KondratievElement {
    let mut e = KondratievElement::scalar(lead);
    for &(pos, c) in terms {
        e.add_term(MultiIndex::unit(pos), Complex64::new(c, 0.0));
    }
    e
}

/// Target `u` and an observation `y = h ∘ u` whose lifted taps do not commute with `S_u`.
fn explicit_scenario() -> Scenario {
    let mut s = demos::additive_noise_scenario();
    let u = demos::stochastic_signal();
    let y = ProcessSpec::wick_ma(0, vec![chaos(1.0, &[(2, 0.3)]), chaos(-0.2, &[(1, 0.1)])], u.clone());
    s.name = "explicit".into();
    s.target = u;
    s.observation = wns_core::harness::ObservationSpec::Explicit { process: y };
    s
}

#[test]
fn causal_filters_have_no_negative_lags() {
    for seed in 0..4 {
        let s = random::scenario(seed);
        let (_, sp) = pair(&s);
        let fr = causal_wiener(&sp, &options(&s)).unwrap();
        assert!(fr.k_ops.is_causal(), "seed {seed}");
        assert!(fr.k_symbols.keys().all(|&l| l >= 0));
    }
}

#[test]
fn additive_noise_spectra_assemble_exactly() {
    let s = demos::additive_noise_scenario();
    let (_, sp) = pair(&s);
    let s_x = spectral_density(&demos::stochastic_signal(), &s.truncation, s.lag_band, &s.density).unwrap();
    assert_eq!(sp.s_uy, s_x);
    let v0 = OperatorLaurent::constant(linalg::identity(sp.dim()) * Complex64::new(0.5, 0.0));
    assert_eq!(sp.s_y, s_x.add(&v0).unwrap());
}

#[test]
fn deterministic_filters_reduce_to_classical_taps() {
    let s = demos::ar1_noise_scenario();
    let (_, sp) = pair(&s);
    let oracle = classical_oracle(&s).unwrap();
    let opts = options(&s);
    for (fr, taps) in [
        (noncausal_wiener(&sp, &opts).unwrap(), &oracle.noncausal),
        (causal_wiener(&sp, &opts).unwrap(), &oracle.causal),
    ] {
        assert!(fr.k_ops.max_dev_from_scalar() <= 1e-12);
        for (lag, want) in taps {
            let got = fr.k_ops.coeff_or_zero(*lag)[(0, 0)];
            assert!((got - want).norm() <= 1e-6, "{:?} lag {lag}: {got} vs {want}", fr.mode);
        }
        for (lag, k) in &fr.k_symbols {
            assert!(k.is_deterministic() || k.terms().all(|(a, c)| a.is_vacuum() || c.norm() < 1e-12), "lag {lag}");
        }
    }
    assert!((oracle.noncausal_gain_at_zero.re - 0.8).abs() <= 1e-8);
    let nc = noncausal_wiener(&sp, &opts).unwrap();
    let gain: Complex64 = nc.k_ops.coeffs().map(|(_, m)| m[(0, 0)]).sum();
    assert!((gain.re - 0.8).abs() <= 1e-8, "operator gain {gain}");
}

#[test]
fn desk_residuals_are_sharp() {
    let s = demos::ar1_noise_scenario();
    let (model, sp) = pair(&s);
    let opts = options(&s);
    let nc = noncausal_wiener(&sp, &opts).unwrap();
    assert!(wiener_hopf_residual(&sp, &nc, s.out_band() / 2).max <= 1e-7);
    let orth = orthogonality_residual(&model, &nc, 2, &s.truncation, s.lag_band).unwrap();
    assert!(orth.max <= 1e-7, "{}", orth.max);

    let s = demos::additive_noise_scenario();
    let (_, sp) = pair(&s);
    let c = causal_wiener(&sp, &options(&s)).unwrap();
    let g = wiener_hopf_residual(&sp, &c, s.out_band() / 2);
    assert!(g.per_lag.iter().all(|&(j, _)| j >= 0));
    assert!(g.max <= 1e-7, "{}", g.max);
}

#[test]
fn causal_slack_lives_on_negative_lags() {
    let s = demos::ar1_noise_scenario();
    let (_, sp) = pair(&s);
    let opts = options(&s);
    let nc = noncausal_wiener(&sp, &opts).unwrap();
    let c = causal_wiener(&sp, &opts).unwrap();
    let window = s.out_band() / 2;
    assert!(wiener_hopf_residual(&sp, &nc, window).max <= 1e-7);
    // Evaluate the causal filter on the two-sided window: the equations hold for
    // j ≥ 0 only, and the slack at j = −1 is of order one.
    let two_sided = FilterResult {
        mode: wns_core::filters::FilterMode::Noncausal,
        ..c.clone()
    };
    let r = wiener_hopf_residual(&sp, &two_sided, window);
    let at = |j: i64| r.per_lag.iter().find(|e| e.0 == j).unwrap().1;
    assert!(at(0) <= 1e-7 && at(window as i64) <= 1e-7);
    assert!(at(-1) > 1e-2, "slack {}", at(-1));
}

#[test]
fn perturbed_filter_is_detected() {
    for s in [demos::additive_noise_scenario(), demos::identity_scenario()] {
        let (model, sp) = pair(&s);
        let mut fr = noncausal_wiener(&sp, &options(&s)).unwrap();
        let k0 = fr.k_ops.coeff_or_zero(0) + linalg::identity(sp.dim()) * Complex64::new(0.1, 0.0);
        fr.k_ops.insert(0, k0);
        let orth = orthogonality_residual(&model, &fr, s.orthogonality_window, &s.truncation, s.lag_band).unwrap();
        assert!(orth.max >= 0.01, "{}: {}", s.name, orth.max);
        assert!(wiener_hopf_residual(&sp, &fr, 8).max >= 0.01);
    }
}

#[test]
fn inverse_belongs_on_the_left() {
    let s = explicit_scenario();
    let (model, sp) = pair(&s);
    let opts = options(&s);
    let fr = noncausal_wiener(&sp, &opts).unwrap();
    assert!(fr.diagnostics.wiener_hopf_max <= 1e-9, "{}", fr.diagnostics.wiener_hopf_max);
    let orth = orthogonality_residual(&model, &fr, 2, &s.truncation, s.lag_band).unwrap();
    assert!(orth.max <= 1e-9, "{}", orth.max);
    let causal = causal_wiener(&sp, &opts).unwrap();
    assert!(causal.diagnostics.wiener_hopf_max <= 1e-9);

    // The right-handed ordering S_uy · S_y^{-1} does not solve the equations.
    let (inv, _) = invert_via_factorization(&sp.s_y, s.out_band() + sp.s_uy.band()).unwrap();
    let wrong = FilterResult {
        k_ops: multiply(&sp.s_uy, &inv).unwrap().truncate(s.out_band()),
        ..fr.clone()
    };
    assert!(wiener_hopf_residual(&sp, &wrong, 8).max > 1e-3);
}

#[test]
fn applied_filter_matches_operator_path() {
    let s = demos::additive_noise_scenario();
    let (_, sp) = pair(&s);
    let fr = noncausal_wiener(&sp, &options(&s)).unwrap();
    let mut rng = random::rng(11);
    let y = RealizedSequence {
        start: -1,
        values: (0..4).map(|_| random::element(&mut rng, 3, 1, 3)).collect(),
    };
    let out = apply_filter(&y, &fr, &s.truncation).unwrap();
    let b0 = Arc::new(BasisEnumeration::new(3, 0).unwrap());
    for (i, got) in out.values.iter().enumerate() {
        let j = out.start + i as i64;
        let mut want = KondratievElement::zero();
        for (m, ym) in y.values.iter().enumerate() {
            let m = y.start + m as i64;
            let Some(k) = fr.k_symbols.get(&(j - m)) else { continue };
            let my = mult_operator_exact(ym, &b0, s.truncation.k).unwrap();
            let mk = mult_operator_exact(k, &my.basis_out, s.truncation.k).unwrap();
            want = want.add(&mk.compose(&my).unwrap().extract_symbol());
        }
        let scale = want.terms().map(|(_, c)| c.norm()).fold(1.0, f64::max);
        assert!(got.max_abs_diff(&want) <= 1e-12 * scale, "j = {j}");
    }
}

#[test]
fn density_rejects_truncated_support() {
    let s = demos::ar1_noise_scenario();
    let err = spectral_density(&demos::ar1_signal(40), &s.truncation, 8, &DensityOptions::default()).unwrap_err();
    assert!(matches!(err, wns_core::WnsError::TailTooHeavy { .. }), "{err}");
}

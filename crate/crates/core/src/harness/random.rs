//! Seeded generators for elements, symbols, systems and scenarios.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{ModeSelection, NoiseCovariance, ObservationSpec, Scenario, Tolerances};
use crate::chaos::{KondratievElement, MultiIndex, TruncationSpec};
use crate::filters::DensityOptions;
use crate::lift::ProcessSpec;
use crate::linalg::CMat;
use crate::opwiener::{FactorOptions, OperatorLaurent};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex<R: Rng>(rng: &mut R, scale: f64) -> Complex64 {
    Complex64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

/// Multi-index with positions `≤ num_vars` and degree `≤ max_degree`.
pub fn multi_index<R: Rng>(rng: &mut R, num_vars: u32, max_degree: u32) -> MultiIndex {
    let degree = rng.random_range(0..=max_degree);
    let mut dense = vec![0u32; num_vars as usize];
    for _ in 0..degree {
        dense[rng.random_range(0..num_vars as usize)] += 1;
    }
    MultiIndex::from_dense(&dense)
}

/// Sparse element with up to `max_terms` terms.
pub fn element<R: Rng>(rng: &mut R, num_vars: u32, max_degree: u32, max_terms: usize) -> KondratievElement {
    let n = rng.random_range(1..=max_terms.max(1));
    KondratievElement::from_terms((0..n).map(|_| (multi_index(rng, num_vars, max_degree), complex(rng, 1.0))))
}

/// Element with vacuum coefficient `lead` and higher chaos of size `spread`.
pub fn tap<R: Rng>(rng: &mut R, num_vars: u32, max_degree: u32, lead: f64, spread: f64) -> KondratievElement {
    let mut e = KondratievElement::scalar(lead);
    for _ in 0..rng.random_range(0..=2) {
        let alpha = multi_index(rng, num_vars, max_degree);
        if !alpha.is_vacuum() {
            e.add_term(alpha, complex(rng, spread));
        }
    }
    e
}

/// Causal `T` whose lag-0 coefficient dominates, so `T` is invertible in the causal algebra.
pub fn causal_series<R: Rng>(rng: &mut R, dim: usize, band: usize) -> OperatorLaurent {
    let mut t = OperatorLaurent::zero(dim, dim);
    let lead = CMat::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(2.0 + rng.random_range(0.0..1.0), 0.0)
        } else {
            complex(rng, 0.3 / dim as f64)
        }
    });
    t.insert(0, lead);
    for n in 1..=band {
        let scale = 0.6 / (dim as f64 * (n as f64 + 1.0));
        t.insert(n as i64, CMat::from_fn(dim, dim, |_, _| complex(rng, scale)));
    }
    t
}

/// `S = T* T` from [`causal_series`].
pub fn pd_symbol<R: Rng>(rng: &mut R, dim: usize, band: usize) -> (OperatorLaurent, OperatorLaurent) {
    let t = causal_series(rng, dim, band);
    let s = t.para_adjoint().multiply(&t).expect("square factors");
    (s, t)
}

/// Stochastic taps for a Wick moving average, vacuum-dominated.
pub fn system_taps<R: Rng>(rng: &mut R, spec: &TruncationSpec, len: usize) -> Vec<KondratievElement> {
    (0..len)
        .map(|i| {
            let lead = if i == 0 { 1.0 } else { rng.random_range(-0.4..0.4) };
            tap(rng, spec.num_vars, 1, lead, 0.3)
        })
        .collect()
}

/// Random stochastic additive-noise scenario on the desk truncation.
pub fn scenario(seed: u64) -> Scenario {
    let mut r = rng(seed);
    let truncation = TruncationSpec::with_defaults(3, 2);
    let len = r.random_range(2..=3);
    let mut taps = system_taps(&mut r, &truncation, len);
    let pos = r.random_range(0..truncation.num_vars as usize);
    let mut dense = vec![0u32; pos + 1];
    dense[pos] = 1;
    taps[0].add_term(MultiIndex::from_dense(&dense), complex(&mut r, 0.3));
    let signal = ProcessSpec::wick_ma(0, taps, ProcessSpec::white(1.0));
    let v0 = NoiseCovariance::Scalar(r.random_range(0.3..1.0));
    Scenario {
        schema_version: super::SCHEMA_VERSION,
        name: format!("random-{seed}"),
        truncation,
        target: signal.clone(),
        observation: ObservationSpec::AdditiveNoise { signal, v0 },
        lag_band: 4,
        out_band: Some(16),
        mode: ModeSelection::Both,
        tolerances: Tolerances::default(),
        factor: FactorOptions::default(),
        density: DensityOptions::default(),
        orthogonality_window: 2,
    }
}

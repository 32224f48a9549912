//! Built-in desk scenarios.

use super::scenario::{ModeSelection, NoiseCovariance, ObservationSpec, Scenario, Tolerances, SCHEMA_VERSION};
use crate::chaos::{KondratievElement, MultiIndex, TruncationSpec};
use crate::filters::DensityOptions;
use crate::lift::ProcessSpec;
use crate::opwiener::FactorOptions;

/// `d = 3` variables, degree 2: a 10-element basis.
pub fn desk_truncation() -> TruncationSpec {
    TruncationSpec::with_defaults(3, 2)
}

fn scenario(name: &str, target: ProcessSpec, observation: ObservationSpec, lag_band: usize, out_band: usize) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        truncation: desk_truncation(),
        target,
        observation,
        lag_band,
        out_band: Some(out_band),
        mode: ModeSelection::Both,
        tolerances: Tolerances::default(),
        factor: FactorOptions::default(),
        density: DensityOptions::default(),
        orthogonality_window: 2,
    }
}

fn chaos(lead: f64, terms: &[(u32, f64)]) -> KondratievElement {
    let mut e = KondratievElement::scalar(lead);
    for &(pos, c) in terms {
        e.add_term(MultiIndex::unit(pos), c.into());
    }
    e
}

/// Wick moving average `x_n = Σ h_t ∘ w_{n−t}` over unit white innovations,
/// with stochastic taps in the first three chaos variables.
pub fn stochastic_signal() -> ProcessSpec {
    ProcessSpec::wick_ma(
        0,
        vec![
            chaos(1.0, &[(1, 0.4)]),
            chaos(0.5, &[(2, 0.2)]),
            chaos(0.25, &[(3, -0.1)]),
        ],
        ProcessSpec::white(1.0),
    )
}

/// Observations estimated from themselves; the optimal filter is the identity.
pub fn identity_scenario() -> Scenario {
    let x = stochastic_signal();
    scenario("identity", x.clone(), ObservationSpec::Explicit { process: x }, 4, 16)
}

/// Taps `0.5^n`, `n = 0..=n_max`, over unit white innovations.
pub fn ar1_signal(n_max: usize) -> ProcessSpec {
    ProcessSpec::wick_ma(
        0,
        (0..=n_max).map(|n| KondratievElement::scalar(0.5f64.powi(n as i32))).collect(),
        ProcessSpec::white(1.0),
    )
}

/// Deterministic AR(1) signal (`S_u = 1/|1 − 0.5e^{iω}|²`, truncated at 40 lags)
/// in unit white noise. The band is wide enough that the truncation of the
/// AR(1) correlation is below `1e−11`.
pub fn ar1_noise_scenario() -> Scenario {
    let x = ar1_signal(40);
    scenario(
        "ar1-noise",
        x.clone(),
        ObservationSpec::AdditiveNoise {
            signal: x,
            v0: NoiseCovariance::Scalar(1.0),
        },
        40,
        160,
    )
}

/// Stochastic signal in additive white noise with `V₀ = 0.5 I`.
pub fn additive_noise_scenario() -> Scenario {
    let x = stochastic_signal();
    scenario(
        "stochastic-additive-noise",
        x.clone(),
        ObservationSpec::AdditiveNoise {
            signal: x,
            v0: NoiseCovariance::Scalar(0.5),
        },
        4,
        16,
    )
}

pub fn desk_scenarios() -> Vec<Scenario> {
    vec![identity_scenario(), ar1_noise_scenario(), additive_noise_scenario()]
}

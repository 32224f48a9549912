//! Spectral densities and the non-causal / causal Wiener filters.
//!
//! Correlations follow `R_x(m) = M*_{x_0} M_{x_m}` and `R_uy(j) = M*_{y_0} M_{u_j}`,
//! with spectra `S(e^{iω}) = Σ R(m) e^{iωm}`. The optimal taps satisfy
//! `R_uy(j) = Σ_m R_y(j − m) K_m`, i.e. `S_y · K = S_uy` with the inverse on
//! the left.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chaos::{KondratievElement, TruncationSpec};
use crate::error::{Result, StageExt, WnsError};
use crate::lift::{self, BasisEnumeration, Lifter, ProcessSpec, DEFAULT_STATIONARITY_TOL};
use crate::linalg::{self, CMat};
use crate::opwiener::{
    causal_invert, invert_via_factorization_with, spectral_factorize, FactorOptions, OperatorLaurent,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityOptions {
    /// Relative correlation mass allowed beyond the lag band; `None` skips the check.
    pub tail_tol: Option<f64>,
    /// Half-width of the stationarity window; `None` skips the check.
    pub stationarity_window: Option<i64>,
    /// Relative (to `‖R(0)‖`, floored at 1) stationarity tolerance.
    pub stationarity_tol: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            tail_tol: Some(1e-10),
            stationarity_window: Some(2),
            stationarity_tol: DEFAULT_STATIONARITY_TOL,
        }
    }
}

fn check_stationary(lifter: &Lifter, p: &ProcessSpec, degree: u32, opts: &DensityOptions) -> Result<()> {
    let Some(window) = opts.stationarity_window else {
        return Ok(());
    };
    let r0 = lifter.correlation_matrix(p, 0, 0, degree)?;
    let tol = opts.stationarity_tol * linalg::op_norm(&r0).max(1.0);
    let report = lift::stationarity_check_with(lifter, p, window, degree, tol)?;
    if !report.stationary {
        return Err(WnsError::NotStationary {
            spread: report.max_spread,
            tol,
        });
    }
    Ok(())
}

fn check_tail(tail: f64, total: f64, band: usize, tol: Option<f64>) -> Result<()> {
    if let Some(tol) = tol {
        let mass = if total > 0.0 { tail / total } else { tail };
        if mass > tol {
            return Err(WnsError::TailTooHeavy { mass, band, tol });
        }
    }
    Ok(())
}

fn density_with(
    lifter: &Lifter,
    p: &ProcessSpec,
    degree: u32,
    lag_band: usize,
    opts: &DensityOptions,
) -> Result<OperatorLaurent> {
    check_stationary(lifter, p, degree, opts)?;
    let dim = lifter.basis(degree)?.len();
    let mut s = OperatorLaurent::zero(dim, dim);
    for m in 0..=lag_band as i64 {
        let r = lifter.correlation_matrix(p, 0, m, degree)?;
        if m == 0 {
            s.insert(0, linalg::hermitian_part(&r));
        } else {
            s.insert(-m, r.adjoint());
            s.insert(m, r);
        }
    }
    if opts.tail_tol.is_some() {
        let mut tail = 0.0;
        for m in lag_band as i64 + 1..=2 * lag_band as i64 + 1 {
            tail += 2.0 * linalg::op_norm(&lifter.correlation_matrix(p, 0, m, degree)?);
        }
        check_tail(tail, s.wiener_norm(), lag_band, opts.tail_tol)?;
    }
    Ok(s)
}

/// `S_x` with lags `|m| ≤ lag_band` on the degree-`W` basis of `spec`.
pub fn spectral_density(
    p: &ProcessSpec,
    spec: &TruncationSpec,
    lag_band: usize,
    opts: &DensityOptions,
) -> Result<OperatorLaurent> {
    spec.validate()?;
    p.validate(spec)?;
    density_with(&Lifter::new(spec), p, spec.max_degree, lag_band, opts)
}

fn cross_density_with(
    lifter: &Lifter,
    u: &ProcessSpec,
    y: &ProcessSpec,
    degree: u32,
    lag_band: usize,
    opts: &DensityOptions,
) -> Result<OperatorLaurent> {
    let dim = lifter.basis(degree)?.len();
    let b = lag_band as i64;
    let mut s = OperatorLaurent::zero(dim, dim);
    for j in -b..=b {
        s.insert(j, lifter.cross_matrix(u, y, 0, j, degree)?);
    }
    if opts.tail_tol.is_some() {
        let mut tail = 0.0;
        for j in b + 1..=2 * b + 1 {
            tail += linalg::op_norm(&lifter.cross_matrix(u, y, 0, j, degree)?);
            tail += linalg::op_norm(&lifter.cross_matrix(u, y, 0, -j, degree)?);
        }
        check_tail(tail, s.wiener_norm().max(f64::MIN_POSITIVE), lag_band, opts.tail_tol)?;
    }
    Ok(s)
}

/// `S_uy` with lag `j` coefficient `M*_{y_0} M_{u_j}`.
pub fn cross_spectral_density(
    u: &ProcessSpec,
    y: &ProcessSpec,
    spec: &TruncationSpec,
    lag_band: usize,
    opts: &DensityOptions,
) -> Result<OperatorLaurent> {
    spec.validate()?;
    u.validate(spec)?;
    y.validate(spec)?;
    cross_density_with(&Lifter::new(spec), u, y, spec.max_degree, lag_band, opts)
}

/// `Z_h` with lag-`n` coefficient `M_{h_n}` from degree `W` to degree `W + deg h`.
pub fn transfer_series(start: i64, taps: &[KondratievElement], spec: &TruncationSpec) -> Result<OperatorLaurent> {
    let dh = taps.iter().map(|h| h.degree() as u32).max().unwrap_or(0);
    let b_in = BasisEnumeration::new(spec.num_vars, spec.max_degree)?;
    let b_out = BasisEnumeration::new(spec.num_vars, spec.max_degree + dh)?;
    let mut z = OperatorLaurent::zero(b_out.len(), b_in.len());
    for (i, h) in taps.iter().enumerate() {
        z.insert(start + i as i64, lift::mult_matrix(h, &b_in, &b_out, spec.k)?);
    }
    Ok(z)
}

/// `para_adjoint(Z_h) · S_x · Z_h`.
///
/// `s_x` must live on the degree-`W + deg h` basis so the compression of the
/// output correlation to degree `W` is exact.
pub fn output_spectrum(
    start: i64,
    taps: &[KondratievElement],
    s_x: &OperatorLaurent,
    spec: &TruncationSpec,
) -> Result<OperatorLaurent> {
    let z = transfer_series(start, taps, spec)?;
    if s_x.rows() != z.rows() || s_x.cols() != z.rows() {
        return Err(WnsError::DimensionMismatch(format!(
            "input spectrum is {}x{}, transfer series needs {}x{}",
            s_x.rows(),
            s_x.cols(),
            z.rows(),
            z.rows()
        )));
    }
    z.para_adjoint().multiply(&s_x.multiply(&z)?)
}

/// Input spectrum on the padded basis that [`output_spectrum`] expects.
pub fn padded_input_spectrum(
    x: &ProcessSpec,
    taps: &[KondratievElement],
    spec: &TruncationSpec,
    lag_band: usize,
    opts: &DensityOptions,
) -> Result<OperatorLaurent> {
    let dh = taps.iter().map(|h| h.degree() as u32).max().unwrap_or(0);
    x.validate(spec)?;
    density_with(&Lifter::new(spec), x, spec.max_degree + dh, lag_band, opts)
}

/// How observations relate to the target.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    /// A process whose correlations with the target are computed directly.
    Explicit(ProcessSpec),
    /// `y = x + v` with `R_v(m) = δ(m) V₀` and `R_xv = 0`.
    AdditiveNoise { signal: ProcessSpec, v0: CMat },
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointModel {
    pub target: ProcessSpec,
    pub observation: Observation,
}

impl JointModel {
    pub fn explicit(target: ProcessSpec, observation: ProcessSpec) -> Self {
        Self {
            target,
            observation: Observation::Explicit(observation),
        }
    }

    pub fn additive_noise(target: ProcessSpec, signal: ProcessSpec, v0: CMat) -> Self {
        Self {
            target,
            observation: Observation::AdditiveNoise { signal, v0 },
        }
    }

    pub fn validate(&self, spec: &TruncationSpec) -> Result<()> {
        spec.validate()?;
        self.target.validate(spec)?;
        match &self.observation {
            Observation::Explicit(y) => y.validate(spec),
            Observation::AdditiveNoise { signal, v0 } => {
                signal.validate(spec)?;
                let dim = spec.basis_size();
                if v0.nrows() as u128 != dim || v0.ncols() as u128 != dim {
                    return Err(WnsError::DimensionMismatch(format!(
                        "V0 is {}x{}, basis has {dim} elements",
                        v0.nrows(),
                        v0.ncols()
                    )));
                }
                let defect = linalg::op_norm(&(v0 - v0.adjoint()));
                if defect > 1e-12 * linalg::op_norm(v0).max(1.0) {
                    return Err(WnsError::NotHermitian { defect });
                }
                let min_eigenvalue = linalg::min_eigenvalue(v0);
                if !(min_eigenvalue > 0.0) {
                    return Err(WnsError::NotPositive {
                        min_eigenvalue,
                        margin: 0.0,
                    });
                }
                Ok(())
            }
        }
    }

    /// `M*_{y_l} M_{y_m}`.
    pub(crate) fn y_gram(&self, lifter: &Lifter, l: i64, m: i64, degree: u32) -> Result<CMat> {
        match &self.observation {
            Observation::Explicit(y) => lifter.cross_matrix(y, y, l, m, degree),
            Observation::AdditiveNoise { signal, v0 } => {
                let r = lifter.cross_matrix(signal, signal, l, m, degree)?;
                Ok(if l == m { r + v0 } else { r })
            }
        }
    }

    /// `M*_{y_l} M_{u_j}`.
    pub(crate) fn uy_gram(&self, lifter: &Lifter, l: i64, j: i64, degree: u32) -> Result<CMat> {
        match &self.observation {
            Observation::Explicit(y) => lifter.cross_matrix(&self.target, y, l, j, degree),
            Observation::AdditiveNoise { signal, .. } => lifter.cross_matrix(&self.target, signal, l, j, degree),
        }
    }

    /// `S_y` and `S_uy`; the additive-noise model assembles `S_y = S_x + V₀`.
    pub fn spectral_pair(&self, spec: &TruncationSpec, lag_band: usize, opts: &DensityOptions) -> Result<SpectralPair> {
        self.validate(spec)?;
        let lifter = Lifter::new(spec);
        let deg = spec.max_degree;
        let (s_y, s_uy) = match &self.observation {
            Observation::Explicit(y) => (
                density_with(&lifter, y, deg, lag_band, opts).stage("observation spectrum")?,
                cross_density_with(&lifter, &self.target, y, deg, lag_band, opts).stage("cross spectrum")?,
            ),
            Observation::AdditiveNoise { signal, v0 } => {
                let s_x = density_with(&lifter, signal, deg, lag_band, opts).stage("signal spectrum")?;
                let s_y = s_x.add(&OperatorLaurent::constant(v0.clone()))?;
                let s_uy = if self.target == *signal {
                    s_x
                } else {
                    cross_density_with(&lifter, &self.target, signal, deg, lag_band, opts).stage("cross spectrum")?
                };
                (s_y, s_uy)
            }
        };
        Ok(SpectralPair {
            s_y,
            s_uy,
            spec: *spec,
            lag_band,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub s_y: OperatorLaurent,
    pub s_uy: OperatorLaurent,
    pub spec: TruncationSpec,
    pub lag_band: usize,
}

impl SpectralPair {
    pub fn new(s_y: OperatorLaurent, s_uy: OperatorLaurent, spec: TruncationSpec, lag_band: usize) -> Result<Self> {
        if !s_y.is_square() || (s_y.rows(), s_y.cols()) != (s_uy.rows(), s_uy.cols()) {
            return Err(WnsError::DimensionMismatch("S_y and S_uy must share a square shape".into()));
        }
        if s_y.rows() as u128 != spec.basis_size() {
            return Err(WnsError::DimensionMismatch(format!(
                "spectra are {}x{}, basis has {} elements",
                s_y.rows(),
                s_y.cols(),
                spec.basis_size()
            )));
        }
        Ok(Self {
            s_y,
            s_uy,
            spec,
            lag_band,
        })
    }

    pub fn dim(&self) -> usize {
        self.s_y.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Noncausal,
    Causal,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterOptions {
    /// Band of the returned filter; defaults to `4 · lag_band`.
    pub out_band: Option<usize>,
    /// Residual window; defaults to `out_band / 2`.
    pub residual_window: Option<usize>,
    pub factor: FactorOptions,
}

impl FilterOptions {
    pub fn out_band(&self, lag_band: usize) -> usize {
        self.out_band.unwrap_or(4 * lag_band.max(1))
    }

    pub fn residual_window(&self, lag_band: usize) -> usize {
        self.residual_window.unwrap_or(self.out_band(lag_band) / 2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterDiagnostics {
    pub factorization_defect: f64,
    pub factorization_iterations: usize,
    pub wiener_hopf_max: f64,
    /// Filled in when the joint process model is available.
    pub orthogonality_max: Option<f64>,
    /// `max_m ‖K_m − M_{K̂_m}‖` on the degree-`W` basis.
    pub multiplicativity_defect: f64,
    /// Share of `‖K‖_wiener` in lags above half the output band.
    pub tail_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub mode: FilterMode,
    pub out_band: usize,
    pub k_ops: OperatorLaurent,
    pub k_symbols: BTreeMap<i64, KondratievElement>,
    pub diagnostics: FilterDiagnostics,
}

fn finish_filter(
    sp: &SpectralPair,
    mode: FilterMode,
    k_ops: OperatorLaurent,
    out_band: usize,
    window: usize,
    factorization_defect: f64,
    factorization_iterations: usize,
) -> Result<FilterResult> {
    let basis = BasisEnumeration::new(sp.spec.num_vars, sp.spec.max_degree)?;
    let mut k_symbols = BTreeMap::new();
    let mut multiplicativity_defect: f64 = 0.0;
    for (lag, m) in k_ops.coeffs() {
        let symbol = lift::extract_symbol_from(m, &basis, sp.spec.k);
        let remult = lift::mult_matrix(&symbol, &basis, &basis, sp.spec.k)?;
        multiplicativity_defect = multiplicativity_defect.max(linalg::op_norm(&(m - remult)));
        k_symbols.insert(lag, symbol);
    }
    let total = k_ops.wiener_norm();
    let half = (out_band / 2) as i64;
    let tail_mass = if total > 0.0 {
        k_ops.filter_lags(|l| l.abs() > half).wiener_norm() / total
    } else {
        0.0
    };
    let mut fr = FilterResult {
        mode,
        out_band,
        k_ops,
        k_symbols,
        diagnostics: FilterDiagnostics {
            factorization_defect,
            factorization_iterations,
            wiener_hopf_max: 0.0,
            orthogonality_max: None,
            multiplicativity_defect,
            tail_mass,
        },
    };
    fr.diagnostics.wiener_hopf_max = wiener_hopf_residual(sp, &fr, window).max;
    Ok(fr)
}

/// `K = S_y^{-1} S_uy`, truncated at the output band.
pub fn noncausal_wiener(sp: &SpectralPair, opts: &FilterOptions) -> Result<FilterResult> {
    let out_band = opts.out_band(sp.lag_band);
    // The inverse is carried past the output band far enough that every kept
    // lag of the product sees all contributing terms.
    let (inv, diag) = invert_via_factorization_with(&sp.s_y, out_band + sp.s_uy.band(), &opts.factor)
        .stage("invert S_y")?;
    let k = crate::opwiener::multiply_fast(&inv, &sp.s_uy)?.truncate(out_band);
    finish_filter(
        sp,
        FilterMode::Noncausal,
        k,
        out_band,
        opts.residual_window(sp.lag_band),
        diag.factorization.defect,
        diag.factorization.iterations,
    )
}

/// `K = W^{-1} 𝒞(W^{-*} S_uy)` with `S_y = W* W`.
pub fn causal_wiener(sp: &SpectralPair, opts: &FilterOptions) -> Result<FilterResult> {
    let out_band = opts.out_band(sp.lag_band);
    let (w, diag) = spectral_factorize(&sp.s_y, &opts.factor).stage("factorize S_y")?;
    let b = causal_invert(&w, out_band.max(sp.lag_band)).stage("invert W")?.series;
    // Lags of B beyond the cross-spectrum band cannot reach the causal half.
    let g = crate::opwiener::multiply_fast(&b.truncate(sp.s_uy.band()).para_adjoint(), &sp.s_uy)?.causal_part();
    let k = crate::opwiener::multiply_fast(&b, &g)?.causal_part().truncate(out_band);
    finish_filter(
        sp,
        FilterMode::Causal,
        k,
        out_band,
        opts.residual_window(sp.lag_band),
        diag.defect,
        diag.iterations,
    )
}

/// `I − W^{-1} V₀`, the additive-noise causal filter in the literal form.
pub fn additive_noise_closed_form(s_y: &OperatorLaurent, v0: &CMat, out_band: usize, opts: &FactorOptions) -> Result<OperatorLaurent> {
    let (w, _) = spectral_factorize(s_y, opts)?;
    let b = causal_invert(&w, out_band)?.series;
    OperatorLaurent::identity(s_y.dim()).sub(&b.right_mul(v0)?)
}

/// `I − W^{-1} W_0^{-*} V₀`, which is what `W^{-1} 𝒞(W^{-*}(S_y − V₀))` reduces to.
pub fn additive_noise_closed_form_normalized(
    s_y: &OperatorLaurent,
    v0: &CMat,
    out_band: usize,
    opts: &FactorOptions,
) -> Result<OperatorLaurent> {
    let (w, _) = spectral_factorize(s_y, opts)?;
    let w0_inv = linalg::inverse(&w.coeff_or_zero(0)).ok_or(WnsError::SingularLeadCoefficient)?;
    let b = causal_invert(&w, out_band)?.series;
    OperatorLaurent::identity(s_y.dim()).sub(&b.right_mul(&(w0_inv.adjoint() * v0))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub mode: FilterMode,
    /// `(j, residual)`.
    pub per_lag: Vec<(i64, f64)>,
    pub max: f64,
}

/// `‖R_uy(j) − Σ_m R_y(j − m) K_m‖`, over `|j| ≤ window` (non-causal) or
/// `0 ≤ j ≤ window` (causal; these are the `g_j`).
pub fn wiener_hopf_residual(sp: &SpectralPair, fr: &FilterResult, window: usize) -> ResidualReport {
    let w = window as i64;
    let js: Vec<i64> = match fr.mode {
        FilterMode::Noncausal => (-w..=w).collect(),
        FilterMode::Causal => (0..=w).collect(),
    };
    let dim = sp.dim();
    let mut per_lag = Vec::with_capacity(js.len());
    let mut max: f64 = 0.0;
    for j in js {
        let mut acc = sp.s_uy.coeff_or_zero(j);
        for (m, km) in fr.k_ops.coeffs() {
            if let Some(r) = sp.s_y.coeff(j - m) {
                acc -= r * km;
            }
        }
        debug_assert_eq!(acc.nrows(), dim);
        let r = linalg::op_norm(&acc);
        max = max.max(r);
        per_lag.push((j, r));
    }
    ResidualReport {
        mode: fr.mode,
        per_lag,
        max,
    }
}

/// Finitely supported realized sequence `values[i]` at time `start + i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedSequence {
    pub start: i64,
    pub values: Vec<KondratievElement>,
}

impl RealizedSequence {
    pub fn get(&self, n: i64) -> Option<&KondratievElement> {
        usize::try_from(n - self.start).ok().and_then(|i| self.values.get(i))
    }
}

/// `û_j = Σ_m y_m ∘ K̂_{j−m}` with the extracted filter symbols.
pub fn apply_filter(y: &RealizedSequence, fr: &FilterResult, spec: &TruncationSpec) -> Result<RealizedSequence> {
    for v in &y.values {
        let position = v.max_position();
        if position > spec.num_vars {
            return Err(WnsError::VariableOutOfRange {
                position,
                num_vars: spec.num_vars,
            });
        }
    }
    let (Some(kmin), Some(kmax)) = (
        fr.k_symbols.keys().next().copied(),
        fr.k_symbols.keys().next_back().copied(),
    ) else {
        return Ok(RealizedSequence {
            start: y.start,
            values: Vec::new(),
        });
    };
    if y.values.is_empty() {
        return Ok(RealizedSequence {
            start: y.start,
            values: Vec::new(),
        });
    }
    let start = y.start + kmin;
    let end = y.start + y.values.len() as i64 - 1 + kmax;
    let mut values = Vec::with_capacity((end - start + 1) as usize);
    for j in start..=end {
        let mut acc = KondratievElement::zero();
        for (lag, k) in &fr.k_symbols {
            if let Some(ym) = y.get(j - lag) {
                acc = acc.add(&ym.wick(k));
            }
        }
        values.push(acc);
    }
    Ok(RealizedSequence { start, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// `(l, j, ‖M*_{y_l}(M_{û_j} − M_{u_j})‖)`.
    pub entries: Vec<(i64, i64, f64)>,
    pub max: f64,
}

/// `‖Σ_m M*_{y_l} M_{y_m} K_{j−m} − M*_{y_l} M_{u_j}‖` from exact Gram products,
/// for `l, j ∈ [−window, window]` (causal mode: `l ≤ j`).
///
/// Only `m` with `|m − l| ≤ lag_band` enter, the range on which the
/// observation correlation was verified to be supported.
pub fn orthogonality_residual(
    model: &JointModel,
    fr: &FilterResult,
    window: usize,
    spec: &TruncationSpec,
    lag_band: usize,
) -> Result<OrthogonalityReport> {
    model.validate(spec)?;
    let lifter = Lifter::new(spec);
    let deg = spec.max_degree;
    let w = window as i64;
    let lb = lag_band as i64;
    let mut grams: HashMap<(i64, i64), Arc<CMat>> = HashMap::new();
    let mut entries = Vec::new();
    let mut max: f64 = 0.0;
    for l in -w..=w {
        for j in -w..=w {
            if fr.mode == FilterMode::Causal && j < l {
                continue;
            }
            let mut acc = -model.uy_gram(&lifter, l, j, deg)?;
            for (lag, km) in fr.k_ops.coeffs() {
                let m = j - lag;
                if (m - l).abs() > lb {
                    continue;
                }
                let g = match grams.get(&(l, m)) {
                    Some(g) => g.clone(),
                    None => {
                        let g = Arc::new(model.y_gram(&lifter, l, m, deg)?);
                        grams.insert((l, m), g.clone());
                        g
                    }
                };
                acc += &*g * km;
            }
            let r = linalg::op_norm(&acc);
            max = max.max(r);
            entries.push((l, j, r));
        }
    }
    Ok(OrthogonalityReport { entries, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::MultiIndex;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn spec() -> TruncationSpec {
        TruncationSpec::with_defaults(2, 2)
    }

    fn white_ma(taps: Vec<KondratievElement>) -> ProcessSpec {
        ProcessSpec::wick_ma(0, taps, ProcessSpec::white(1.0))
    }

    #[test]
    fn white_density_is_identity() {
        let s = spectral_density(&ProcessSpec::white(1.0), &spec(), 3, &DensityOptions::default()).unwrap();
        assert!(s.distance(&OperatorLaurent::identity(6)).unwrap() < 1e-15);
    }

    #[test]
    fn modulated_density_ramps_phase() {
        let rho = KondratievElement::scalar(1.0).add(&KondratievElement::monomial(MultiIndex::unit(1), 1.0));
        let lambda = Complex64::new(0.0, 1.0);
        let p = ProcessSpec::Modulated { lambda, rho: rho.clone() };
        let opts = DensityOptions {
            tail_tol: None,
            ..DensityOptions::default()
        };
        let sp = spec();
        let s = spectral_density(&p, &sp, 3, &opts).unwrap();
        let r0 = lift::correlation(&p, 0, 0, &sp).unwrap().matrix;
        for m in -3i64..=3 {
            let expected = &r0 * lambda.powi(m as i32);
            assert!(linalg::frobenius(&(s.coeff_or_zero(m) - expected)) < 1e-12, "lag {m}");
        }
        assert!(matches!(
            spectral_density(&p, &sp, 3, &DensityOptions::default()),
            Err(WnsError::TailTooHeavy { .. })
        ));
    }

    #[test]
    fn output_spectrum_matches_direct_density() {
        let sp = spec();
        let h0 = KondratievElement::scalar(1.0).add(&KondratievElement::monomial(MultiIndex::unit(2), 0.4));
        let h1 = KondratievElement::scalar(-0.3);
        let x = white_ma(vec![KondratievElement::scalar(1.0), KondratievElement::scalar(0.5)]);
        let taps = vec![h0, h1];
        let y = ProcessSpec::wick_ma(0, taps.clone(), x.clone());
        let direct = spectral_density(&y, &sp, 2, &DensityOptions::default()).unwrap();
        let s_x = padded_input_spectrum(&x, &taps, &sp, 1, &DensityOptions::default()).unwrap();
        let two_path = output_spectrum(0, &taps, &s_x, &sp).unwrap();
        assert!(direct.distance(&two_path).unwrap() < 1e-12);
    }

    #[test]
    fn deterministic_gain_scales_spectrum() {
        let sp = spec();
        let x = white_ma(vec![KondratievElement::scalar(1.0), KondratievElement::scalar(0.25)]);
        let s_x = spectral_density(&x, &sp, 1, &DensityOptions::default()).unwrap();
        let cgain = Complex64::new(0.6, -0.8) * 2.0;
        let out = output_spectrum(0, &[KondratievElement::scalar(cgain)], &s_x, &sp).unwrap();
        assert!(out.distance(&s_x.scale(c(cgain.norm_sqr()))).unwrap() < 1e-13);
        let id = output_spectrum(0, &[KondratievElement::scalar(1.0)], &s_x, &sp).unwrap();
        assert!(id.distance(&s_x).unwrap() < 1e-15);
    }

    fn desk_pair() -> SpectralPair {
        let x = white_ma(vec![KondratievElement::scalar(1.0), KondratievElement::scalar(0.5)]);
        JointModel::explicit(x.clone(), x)
            .spectral_pair(&TruncationSpec::with_defaults(1, 1), 1, &DensityOptions::default())
            .unwrap()
    }

    #[test]
    fn self_estimation_is_identity() {
        let sp = desk_pair();
        let opts = FilterOptions::default();
        for fr in [noncausal_wiener(&sp, &opts).unwrap(), causal_wiener(&sp, &opts).unwrap()] {
            assert!(fr.diagnostics.multiplicativity_defect < 1e-9, "{:?}", fr.diagnostics);
            assert!(fr.diagnostics.wiener_hopf_max < 1e-9, "{:?} {:?}", fr.diagnostics, fr.k_ops);
            assert!(fr.diagnostics.multiplicativity_defect < 1e-9);
        }
    }

    #[test]
    fn whitened_observations_pass_through() {
        let sp0 = TruncationSpec::with_defaults(1, 1);
        let s_uy = OperatorLaurent::from_coeffs(
            2,
            2,
            [
                (-1, linalg::identity(2) * c(0.3)),
                (0, linalg::identity(2) * c(0.5)),
                (2, linalg::identity(2) * c(-0.2)),
            ],
        )
        .unwrap();
        let sp = SpectralPair::new(OperatorLaurent::identity(2), s_uy.clone(), sp0, 2).unwrap();
        let opts = FilterOptions::default();
        let nc = noncausal_wiener(&sp, &opts).unwrap();
        assert!(nc.k_ops.distance(&s_uy).unwrap() < 1e-12);
        let ca = causal_wiener(&sp, &opts).unwrap();
        assert!(ca.k_ops.distance(&s_uy.causal_part()).unwrap() < 1e-12);
        assert!(ca.k_ops.is_causal());
    }

    #[test]
    fn apply_filter_shifts_and_scales() {
        let sp0 = spec();
        let y = RealizedSequence {
            start: 0,
            values: vec![
                KondratievElement::monomial(MultiIndex::unit(1), 1.0),
                KondratievElement::scalar(2.0),
            ],
        };
        let mut k_symbols = BTreeMap::new();
        k_symbols.insert(1, KondratievElement::scalar(3.0));
        let fr = FilterResult {
            mode: FilterMode::Causal,
            out_band: 1,
            k_ops: OperatorLaurent::zero(6, 6),
            k_symbols,
            diagnostics: FilterDiagnostics {
                factorization_defect: 0.0,
                factorization_iterations: 0,
                wiener_hopf_max: 0.0,
                orthogonality_max: None,
                multiplicativity_defect: 0.0,
                tail_mass: 0.0,
            },
        };
        let out = apply_filter(&y, &fr, &sp0).unwrap();
        assert_eq!(out.start, 1);
        assert_eq!(out.values[0], y.values[0].scale(c(3.0)));
        assert_eq!(out.values[1], KondratievElement::scalar(6.0));
    }
}

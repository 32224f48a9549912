//! Classical scalar Wiener filters on a dense frequency grid.
//!
//! Everything here works on scalar sequences and FFTs; nothing routes through
//! the lifting or operator Wiener-algebra code, so the results serve as an
//! independent check of the deterministic reduction.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};
use crate::lift::ProcessSpec;

pub const DEFAULT_GRID: usize = 4096;

/// Scalar cross product `conj(q_n) · p_m` of two deterministic processes.
///
/// Mirrors the structure of a process description in plain complex arithmetic.
pub fn scalar_cross(p: &ProcessSpec, q: &ProcessSpec, n: i64, m: i64) -> Result<Complex64> {
    if let ProcessSpec::WickMa { start, taps, input } = p {
        let mut acc = Complex64::default();
        for (i, h) in taps.iter().enumerate() {
            let h = scalar_of(h)?;
            if h != Complex64::default() {
                acc += h * scalar_cross(input, q, n, m - start - i as i64)?;
            }
        }
        return Ok(acc);
    }
    if let ProcessSpec::WickMa { start, taps, input } = q {
        let mut acc = Complex64::default();
        for (i, g) in taps.iter().enumerate() {
            let g = scalar_of(g)?;
            if g != Complex64::default() {
                acc += g.conj() * scalar_cross(p, input, n - start - i as i64, m)?;
            }
        }
        return Ok(acc);
    }
    match (p, q) {
        (ProcessSpec::White { variance: a }, ProcessSpec::White { variance: b }) => {
            Ok(if n == m { Complex64::new((a * b).sqrt(), 0.0) } else { Complex64::default() })
        }
        (ProcessSpec::White { .. }, _) | (_, ProcessSpec::White { .. }) => Err(WnsError::IncompatibleSources(
            "white innovations paired with a realized sequence".into(),
        )),
        _ => Ok(leaf_value(q, n)?.conj() * leaf_value(p, m)?),
    }
}

fn scalar_of(e: &crate::chaos::KondratievElement) -> Result<Complex64> {
    if !e.is_deterministic() {
        return Err(WnsError::Invalid("classical oracle needs deterministic elements".into()));
    }
    Ok(e.vacuum_coeff())
}

fn leaf_value(p: &ProcessSpec, n: i64) -> Result<Complex64> {
    match p {
        ProcessSpec::Deterministic { start, values } => Ok(usize::try_from(n - start)
            .ok()
            .and_then(|i| values.get(i).copied())
            .unwrap_or_default()),
        ProcessSpec::Modulated { lambda, rho } => Ok(lambda.powi(n as i32) * scalar_of(rho)?),
        _ => Err(WnsError::Invalid("not a leaf process".into())),
    }
}

/// Values of `Σ_{|m| ≤ band} r(m) e^{iωm}` on an `n`-point grid, `r(m) = f(m)`.
pub fn sample_sequence(band: usize, n: usize, f: impl Fn(i64) -> Result<Complex64>) -> Result<Vec<Complex64>> {
    let mut buf = vec![Complex64::default(); n];
    let b = band as i64;
    for m in -b..=b {
        buf[m.rem_euclid(n as i64) as usize] += f(m)?;
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(buf)
}

fn coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

fn from_coefficients(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

fn at_lag(coeffs: &[Complex64], lag: i64) -> Complex64 {
    coeffs[lag.rem_euclid(coeffs.len() as i64) as usize]
}

/// Values of the causal minimum-phase factor `W` with `|W|² = s` and `W_0 > 0`,
/// obtained from the cepstrum of `s`.
pub fn cepstral_factor(s: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = s.len();
    let mut log_s = Vec::with_capacity(n);
    for v in s {
        if !(v.re > 0.0) {
            return Err(WnsError::NotPositive {
                min_eigenvalue: v.re,
                margin: 0.0,
            });
        }
        log_s.push(Complex64::new(v.re.ln(), 0.0));
    }
    let c = coefficients(&log_s);
    let mut half = vec![Complex64::default(); n];
    half[0] = c[0] * 0.5;
    half[1..n / 2].copy_from_slice(&c[1..n / 2]);
    Ok(from_coefficients(&half).into_iter().map(|z| z.exp()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalFilters {
    pub grid: usize,
    /// Noncausal taps `k_n`, `|n| ≤ out_band`.
    pub noncausal: BTreeMap<i64, Complex64>,
    /// Causal taps `k_n`, `0 ≤ n ≤ out_band`.
    pub causal: BTreeMap<i64, Complex64>,
    /// Taps of the minimum-phase factor, `0 ≤ n ≤ out_band`.
    pub w_plus: BTreeMap<i64, Complex64>,
    /// Noncausal frequency response at `ω = 0`.
    pub noncausal_gain_at_zero: Complex64,
}

/// Both filters from sampled spectra: `H = S_uy / S_y` and
/// `K = W^{-1} [S_uy / conj(W)]_+`.
pub fn classical_filters(s_y: &[Complex64], s_uy: &[Complex64], out_band: usize) -> Result<ClassicalFilters> {
    let n = s_y.len();
    if s_uy.len() != n || n <= 2 * out_band {
        return Err(WnsError::AliasingRisk { num_points: n, band: out_band });
    }
    let h: Vec<Complex64> = s_uy.iter().zip(s_y).map(|(a, b)| a / b).collect();
    let hc = coefficients(&h);

    let w = cepstral_factor(s_y)?;
    let wc = coefficients(&w);
    let f: Vec<Complex64> = s_uy.iter().zip(&w).map(|(a, wj)| a / wj.conj()).collect();
    let mut fc = coefficients(&f);
    for (k, z) in fc.iter_mut().enumerate() {
        if k >= n / 2 {
            *z = Complex64::default();
        }
    }
    let f_plus = from_coefficients(&fc);
    let k_samples: Vec<Complex64> = f_plus.iter().zip(&w).map(|(a, wj)| a / wj).collect();
    let kc = coefficients(&k_samples);

    let b = out_band as i64;
    Ok(ClassicalFilters {
        grid: n,
        noncausal: (-b..=b).map(|l| (l, at_lag(&hc, l))).collect(),
        causal: (0..=b).map(|l| (l, at_lag(&kc, l))).collect(),
        w_plus: (0..=b).map(|l| (l, at_lag(&wc, l))).collect(),
        noncausal_gain_at_zero: h[0],
    })
}

/// Scalar description of a deterministic filtering problem.
#[derive(Clone, Debug)]
pub struct ScalarProblem {
    pub target: ProcessSpec,
    pub observation: ProcessSpec,
    /// Additive white-noise variance; zero for explicit observations.
    pub noise_variance: f64,
    /// Set when the observation is `signal + noise` and `signal` stands in for it.
    pub additive: bool,
    pub lag_band: usize,
}

impl ScalarProblem {
    /// Scalar `r_y(m)`.
    pub fn r_y(&self, m: i64) -> Result<Complex64> {
        let r = scalar_cross(&self.observation, &self.observation, 0, m)?;
        Ok(if self.additive && m == 0 {
            r + self.noise_variance
        } else {
            r
        })
    }

    /// Scalar `r_uy(j) = conj(y_0) u_j`.
    pub fn r_uy(&self, j: i64) -> Result<Complex64> {
        scalar_cross(&self.target, &self.observation, 0, j)
    }

    pub fn solve(&self, out_band: usize, grid: usize) -> Result<ClassicalFilters> {
        let s_y = sample_sequence(self.lag_band, grid, |m| self.r_y(m))?;
        let s_uy = sample_sequence(self.lag_band, grid, |m| self.r_uy(m))?;
        classical_filters(&s_y, &s_uy, out_band)
    }
}

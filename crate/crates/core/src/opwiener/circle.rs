//! Uniform sampling of Laurent series on the unit circle.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::OperatorLaurent;
use crate::error::{Result, WnsError};
use crate::linalg::{self, CMat};

/// Default strict-positivity margin.
pub const DEFAULT_MARGIN: f64 = 1e-8;

/// Relative tolerance on `‖V − V*‖` at each sample.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Smallest power of two strictly above `8 · band` (at least 16).
pub fn default_num_points(band: usize) -> usize {
    (8 * band + 1).next_power_of_two().max(16)
}

pub(crate) struct CircleGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CircleGrid {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// `W(ω_j) = Σ_n A_n e^{iω_j n}` at `ω_j = 2πj/N`; lags wrap modulo `N`.
    pub(crate) fn sample(&self, w: &OperatorLaurent) -> Vec<CMat> {
        let (rows, cols) = (w.rows(), w.cols());
        let n = self.n as i64;
        let mut out = vec![linalg::zeros(rows, cols); self.n];
        let mut buf = vec![Complex64::default(); self.n];
        for i in 0..rows {
            for j in 0..cols {
                buf.iter_mut().for_each(|z| *z = Complex64::default());
                for (lag, m) in w.coeffs() {
                    buf[lag.rem_euclid(n) as usize] += m[(i, j)];
                }
                self.inverse.process(&mut buf);
                for (s, z) in out.iter_mut().zip(&buf) {
                    s[(i, j)] = *z;
                }
            }
        }
        out
    }

    /// `A_n = N^{-1} Σ_j W(ω_j) e^{−iω_j n}` for every lag in `lags`.
    pub(crate) fn coefficients(
        &self,
        samples: &[CMat],
        lags: impl Iterator<Item = i64> + Clone,
    ) -> OperatorLaurent {
        let (rows, cols) = (samples[0].nrows(), samples[0].ncols());
        let n = self.n as i64;
        let scale = 1.0 / self.n as f64;
        let lag_list: Vec<i64> = lags.collect();
        let mut mats: Vec<CMat> = vec![linalg::zeros(rows, cols); lag_list.len()];
        let mut buf = vec![Complex64::default(); self.n];
        for i in 0..rows {
            for j in 0..cols {
                for (b, s) in buf.iter_mut().zip(samples) {
                    *b = s[(i, j)];
                }
                self.forward.process(&mut buf);
                for (m, lag) in mats.iter_mut().zip(&lag_list) {
                    m[(i, j)] = buf[lag.rem_euclid(n) as usize] * scale;
                }
            }
        }
        let mut out = OperatorLaurent::zero(rows, cols);
        for (lag, m) in lag_list.into_iter().zip(mats) {
            out.insert(lag, m);
        }
        out
    }
}

/// Cauchy product through circle samples; exact up to roundoff because the
/// grid is longer than the lag span of the result.
pub(crate) fn sampled_product(a: &OperatorLaurent, b: &OperatorLaurent) -> Result<OperatorLaurent> {
    if a.cols() != b.rows() {
        return Err(WnsError::DimensionMismatch("sampled product".into()));
    }
    let (Some(lo), Some(hi)) = (
        a.min_lag().zip(b.min_lag()).map(|(x, y)| x + y),
        a.max_lag().zip(b.max_lag()).map(|(x, y)| x + y),
    ) else {
        return Ok(OperatorLaurent::zero(a.rows(), b.cols()));
    };
    let span = (hi - lo) as usize;
    let grid = CircleGrid::new((span + 1).next_power_of_two().max(16));
    let sa = grid.sample(a);
    let sb = grid.sample(b);
    let prod: Vec<CMat> = sa.iter().zip(&sb).map(|(x, y)| x * y).collect();
    Ok(grid.coefficients(&prod, lo..=hi))
}

/// Direct Cauchy product for small operands, circle sampling otherwise.
pub(crate) fn fast_multiply(a: &OperatorLaurent, b: &OperatorLaurent) -> Result<OperatorLaurent> {
    let na = a.coeffs().count();
    let nb = b.coeffs().count();
    if na * nb <= 256 {
        a.multiply(b)
    } else {
        sampled_product(a, b)
    }
}

/// Values of `w` at `ω_j = 2πj / num_points`.
pub fn sample_circle(w: &OperatorLaurent, num_points: usize) -> Result<Vec<CMat>> {
    if num_points <= 2 * w.band() {
        return Err(WnsError::AliasingRisk {
            num_points,
            band: w.band(),
        });
    }
    Ok(CircleGrid::new(num_points).sample(w))
}

/// Inverse of [`sample_circle`] for lags `−band..=band`.
pub fn coefficients_from_samples(samples: &[CMat], band: usize) -> Result<OperatorLaurent> {
    if samples.len() <= 2 * band {
        return Err(WnsError::AliasingRisk {
            num_points: samples.len(),
            band,
        });
    }
    let b = band as i64;
    Ok(CircleGrid::new(samples.len()).coefficients(samples, -b..=b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub num_points: usize,
    pub min_eigenvalue: f64,
    pub argmin_omega: f64,
    pub max_hermitian_defect: f64,
    pub hermitian: bool,
    pub margin: f64,
    pub positive: bool,
}

/// Hermitian symmetry and strict positivity at the default margin.
pub fn positivity_check(w: &OperatorLaurent, num_points: usize) -> Result<PositivityReport> {
    positivity_check_with(w, num_points, DEFAULT_MARGIN)
}

pub fn positivity_check_with(
    w: &OperatorLaurent,
    num_points: usize,
    margin: f64,
) -> Result<PositivityReport> {
    if !w.is_square() {
        return Err(WnsError::DimensionMismatch("positivity needs a square symbol".into()));
    }
    let samples = sample_circle(w, num_points)?;
    let scale = w.wiener_norm().max(1.0);
    let mut min_eigenvalue = f64::INFINITY;
    let mut argmin_omega = 0.0;
    let mut max_hermitian_defect: f64 = 0.0;
    for (j, v) in samples.iter().enumerate() {
        max_hermitian_defect = max_hermitian_defect.max(linalg::op_norm(&(v - v.adjoint())));
        let e = linalg::min_eigenvalue(v);
        if e < min_eigenvalue {
            min_eigenvalue = e;
            argmin_omega = 2.0 * std::f64::consts::PI * j as f64 / num_points as f64;
        }
    }
    let hermitian = max_hermitian_defect <= HERMITIAN_TOL * scale;
    Ok(PositivityReport {
        num_points,
        min_eigenvalue,
        argmin_omega,
        max_hermitian_defect,
        hermitian,
        margin,
        positive: hermitian && min_eigenvalue > margin,
    })
}

/// Rows `(omega, e00_re, e00_im, e01_re, ..., min_eigenvalue)`, one per sample.
pub fn write_spectrum_csv<W: Write>(w: &OperatorLaurent, num_points: usize, out: W) -> Result<()> {
    let samples = sample_circle(w, num_points)?;
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["omega".to_string()];
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            header.push(format!("e{i}_{j}_re"));
            header.push(format!("e{i}_{j}_im"));
        }
    }
    header.push("min_eigenvalue".into());
    writer.write_record(&header)?;
    for (idx, v) in samples.iter().enumerate() {
        let omega = 2.0 * std::f64::consts::PI * idx as f64 / num_points as f64;
        let mut row = vec![omega.to_string()];
        for i in 0..v.nrows() {
            for j in 0..v.ncols() {
                row.push(v[(i, j)].re.to_string());
                row.push(v[(i, j)].im.to_string());
            }
        }
        let e = if w.is_square() {
            linalg::min_eigenvalue(v)
        } else {
            f64::NAN
        };
        row.push(e.to_string());
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|source| WnsError::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

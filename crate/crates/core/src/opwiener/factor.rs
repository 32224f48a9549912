//! Causal inversion and spectral factorization `S = W* W`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circle::{default_num_points, fast_multiply, CircleGrid};
use super::OperatorLaurent;
use crate::error::{Result, WnsError};
use crate::linalg::{self, CMat};

/// Relative tolerance on the coefficient-wise Hermitian defect of an input symbol.
const HERMITIAN_REL_TOL: f64 = 1e-10;

/// Relative mass allowed in the last quarter of the internal causal inverse.
const INNER_TAIL_TOL: f64 = 1e-15;

const INNER_BAND_CAP: usize = 1 << 14;

/// Band doublings allowed when no working band is configured.
pub const MAX_GROWTH: usize = 4;

/// Tail share of an iterate above which a stalled iteration is resumed on a wider band.
const GROWTH_TAIL_TOL: f64 = 1e-13;

/// Iterations without improvement before the Newton loop gives up.
const STALL_LIMIT: usize = 6;

#[derive(Clone, Debug)]
pub struct CausalInverse {
    pub series: OperatorLaurent,
    /// `‖A·B − I‖_wiener` for the truncated inverse.
    pub tail_defect: f64,
}

/// Causal `B` with `A·B = I` through lag `out_band`.
pub fn causal_invert(w: &OperatorLaurent, out_band: usize) -> Result<CausalInverse> {
    if !w.is_square() {
        return Err(WnsError::DimensionMismatch("causal_invert needs a square series".into()));
    }
    if !w.is_causal() {
        return Err(WnsError::Invalid("causal_invert needs a causal series".into()));
    }
    let d = w.dim();
    let a0_inv = w
        .coeff(0)
        .and_then(|a0| {
            let inv = linalg::inverse(a0)?;
            inv.iter().all(|z| z.is_finite()).then_some(inv)
        })
        .ok_or(WnsError::SingularLeadCoefficient)?;
    let mut b: Vec<CMat> = Vec::with_capacity(out_band + 1);
    b.push(a0_inv.clone());
    for n in 1..=out_band {
        let mut acc = linalg::zeros(d, d);
        for (m, am) in w.coeffs() {
            let m = m as usize;
            if m == 0 || m > n {
                continue;
            }
            acc += am * &b[n - m];
        }
        b.push(-(&a0_inv * acc));
    }
    let series = OperatorLaurent::from_coeffs(d, d, b.into_iter().enumerate().map(|(n, m)| (n as i64, m)))?;
    let tail_defect = fast_multiply(w, &series)?
        .sub(&OperatorLaurent::identity(d))?
        .wiener_norm();
    Ok(CausalInverse { series, tail_defect })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorOptions {
    pub tol: f64,
    pub min_margin: f64,
    pub max_iter: usize,
    /// Circle grid size; defaults to the next power of two above `8 · band`.
    pub num_points: Option<usize>,
    /// Lag band kept between iterations; defaults to `4 · band`.
    pub working_band: Option<usize>,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            min_margin: 1e-8,
            max_iter: 100,
            num_points: None,
            working_band: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    pub iterations: usize,
    /// `‖W*W − S‖_wiener / ‖S‖_wiener`.
    pub defect: f64,
    pub min_eigenvalue: f64,
    pub num_points: usize,
    pub working_band: usize,
    /// Share of `‖W‖_wiener` carried by lags above half the working band.
    pub tail_mass: f64,
    pub converged: bool,
}

fn check_symbol(s: &OperatorLaurent) -> Result<()> {
    if !s.is_square() {
        return Err(WnsError::DimensionMismatch("spectral factorization needs a square symbol".into()));
    }
    if s.is_zero() {
        return Err(WnsError::NotPositive {
            min_eigenvalue: 0.0,
            margin: 0.0,
        });
    }
    let defect = s.hermitian_defect();
    if defect > HERMITIAN_REL_TOL * s.wiener_norm() {
        return Err(WnsError::NotHermitian { defect });
    }
    Ok(())
}

/// Unitary left factor making the lag-0 coefficient lower-triangular with positive diagonal.
fn normalize_lead(w: &OperatorLaurent) -> Result<OperatorLaurent> {
    let w0 = w.coeff(0).ok_or(WnsError::SingularLeadCoefficient)?;
    let gram = linalg::hermitian_part(&(w0.adjoint() * w0));
    let l = linalg::lower_cholesky_star(&gram).ok_or(WnsError::SingularLeadCoefficient)?;
    let w0_inv = linalg::inverse(w0).ok_or(WnsError::SingularLeadCoefficient)?;
    w.left_mul(&(l * w0_inv))
}

fn tail_mass(w: &OperatorLaurent, working_band: usize) -> f64 {
    let total = w.wiener_norm();
    if total == 0.0 {
        return 0.0;
    }
    let half = (working_band / 2) as i64;
    w.filter_lags(|l| l > half).wiener_norm() / total
}

/// Relative factorization defect evaluated from grid samples.
fn sampled_defect(grid: &CircleGrid, t: &[CMat], s: &[CMat], band: usize, s_norm: f64) -> f64 {
    let diff: Vec<CMat> = t.iter().zip(s).map(|(tj, sj)| tj.adjoint() * tj - sj).collect();
    let b = band as i64;
    grid.coefficients(&diff, -b..=b).wiener_norm() / s_norm
}

/// Causal `W` with `para_adjoint(W)·W = s`, via Newton iteration on circle samples.
///
/// When no working band is configured, a stalled iteration whose iterate still
/// carries tail mass is resumed on a doubled band (up to [`MAX_GROWTH`] doublings).
pub fn spectral_factorize(
    s: &OperatorLaurent,
    opts: &FactorOptions,
) -> Result<(OperatorLaurent, FactorDiagnostics)> {
    check_symbol(s)?;
    let d = s.dim();
    let band = s.band();
    let mut working_band = opts.working_band.unwrap_or(4 * band).max(band);
    let points_for = |wb: usize| {
        opts.num_points
            .unwrap_or_else(|| default_num_points(band).max((2 * wb + 1).next_power_of_two()))
    };
    let mut num_points = points_for(working_band);
    if num_points <= 2 * working_band {
        return Err(WnsError::AliasingRisk {
            num_points,
            band: working_band,
        });
    }
    let mut grid = CircleGrid::new(num_points);
    let mut s_samples = grid.sample(s);
    let min_eigenvalue = s_samples
        .iter()
        .map(linalg::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    if !(min_eigenvalue > opts.min_margin) {
        return Err(WnsError::NotPositive {
            min_eigenvalue,
            margin: opts.min_margin,
        });
    }
    let s_norm = s.wiener_norm();
    let s0 = linalg::hermitian_part(&s.coeff_or_zero(0));
    let t0 = linalg::lower_cholesky_star(&s0).ok_or(WnsError::NotPositive {
        min_eigenvalue: linalg::min_eigenvalue(&s0),
        margin: opts.min_margin,
    })?;
    let mut t = OperatorLaurent::constant(t0);

    let finish = |t: OperatorLaurent,
                  iterations: usize,
                  defect: f64,
                  num_points: usize,
                  working_band: usize|
     -> Result<(OperatorLaurent, FactorDiagnostics)> {
        let w = normalize_lead(&t)?;
        let diagnostics = FactorDiagnostics {
            iterations,
            defect,
            min_eigenvalue,
            num_points,
            working_band,
            tail_mass: tail_mass(&w, working_band),
            converged: true,
        };
        Ok((w, diagnostics))
    };

    if band == 0 {
        let defect = t.para_adjoint().multiply(&t)?.sub(s)?.wiener_norm() / s_norm;
        return finish(t, 0, defect, num_points, working_band);
    }

    let identity = linalg::identity(d);
    let mut iteration = 0;
    let mut growths = 0;
    let mut defect;
    loop {
        let wb = working_band as i64;
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        loop {
            let t_samples = grid.sample(&t);
            defect = sampled_defect(&grid, &t_samples, &s_samples, working_band, s_norm);
            if defect < opts.tol {
                return finish(t, iteration, defect, num_points, working_band);
            }
            if defect < best * (1.0 - 1e-3) {
                best = defect;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if iteration >= opts.max_iter || stalled >= STALL_LIMIT || !defect.is_finite() {
                break;
            }
            iteration += 1;
            // Newton step: with M = T^{-*} S T^{-1} + I and Y the causal half of M
            // (Y + Y* = M), the update is T <- Y T.
            let mut m_samples = Vec::with_capacity(num_points);
            for (tj, sj) in t_samples.iter().zip(&s_samples) {
                let Some(inv) = linalg::inverse(tj) else {
                    return Err(WnsError::NoConvergence {
                        iterations: iteration,
                        defect,
                    });
                };
                m_samples.push(linalg::hermitian_part(&(inv.adjoint() * sj * &inv)) + &identity);
            }
            let mut y = grid.coefficients(&m_samples, 0..=wb);
            let m0 = y.coeff_or_zero(0);
            let y0 = CMat::from_fn(d, d, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Greater => m0[(i, j)],
                std::cmp::Ordering::Equal => Complex64::new(m0[(i, i)].re * 0.5, 0.0),
                std::cmp::Ordering::Less => Complex64::default(),
            });
            y.insert(0, y0);
            let y_samples = grid.sample(&y);
            let next: Vec<CMat> = y_samples.iter().zip(&t_samples).map(|(yj, tj)| yj * tj).collect();
            t = grid.coefficients(&next, 0..=wb);
        }
        let can_grow = opts.working_band.is_none()
            && growths < MAX_GROWTH
            && iteration < opts.max_iter
            && defect.is_finite()
            && tail_mass(&t, working_band) > GROWTH_TAIL_TOL;
        if !can_grow {
            break;
        }
        growths += 1;
        working_band *= 2;
        num_points = points_for(working_band);
        if num_points <= 2 * working_band {
            break;
        }
        grid = CircleGrid::new(num_points);
        s_samples = grid.sample(s);
    }
    Err(WnsError::NoConvergence {
        iterations: iteration,
        defect,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseDiagnostics {
    pub factorization: FactorDiagnostics,
    /// Band of the causal inverse used before truncation.
    pub inner_band: usize,
    /// `‖S·S^{-1} − I‖_wiener`.
    pub identity_defect: f64,
}

/// `S^{-1} = W^{-1} (W^{-1})*` truncated at `out_band`, with default factorization options.
pub fn invert_via_factorization(s: &OperatorLaurent, out_band: usize) -> Result<(OperatorLaurent, InverseDiagnostics)> {
    invert_via_factorization_with(s, out_band, &FactorOptions::default())
}

pub fn invert_via_factorization_with(
    s: &OperatorLaurent,
    out_band: usize,
    opts: &FactorOptions,
) -> Result<(OperatorLaurent, InverseDiagnostics)> {
    let (w, factorization) = spectral_factorize(s, opts)?;
    // Lag n of B·B* sums B_{n+m} B_m* over all m, so B is extended until its
    // remaining mass is negligible.
    let mut inner_band = 2 * out_band.max(1);
    let mut b = causal_invert(&w, inner_band)?.series;
    while inner_band < INNER_BAND_CAP {
        let total = b.wiener_norm();
        let edge = (inner_band - inner_band / 4) as i64;
        if b.filter_lags(|l| l > edge).wiener_norm() <= INNER_TAIL_TOL * total {
            break;
        }
        inner_band *= 2;
        b = causal_invert(&w, inner_band)?.series;
    }
    let inv = fast_multiply(&b, &b.para_adjoint())?.truncate(out_band);
    let identity_defect = fast_multiply(s, &inv)?
        .sub(&OperatorLaurent::identity(s.dim()))?
        .wiener_norm();
    Ok((
        inv,
        InverseDiagnostics {
            factorization,
            inner_band,
            identity_defect,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar_at(w: &OperatorLaurent, lag: i64) -> Complex64 {
        w.coeff(lag).map(|m| m[(0, 0)]).unwrap_or_default()
    }

    #[test]
    fn geometric_inverse() {
        let w = OperatorLaurent::scalar([(0, c(1.0)), (1, c(-0.5))]);
        let inv = causal_invert(&w, 20).unwrap();
        for n in 0..=20 {
            assert!((scalar_at(&inv.series, n) - c(0.5f64.powi(n as i32))).norm() < 1e-15);
        }
        assert!(inv.tail_defect < 1e-6);
        assert!(inv.series.is_causal());
    }

    #[test]
    fn invert_constant_and_identity() {
        let a = CMat::from_row_slice(2, 2, &[c(2.0), c(1.0), c(0.0), c(4.0)]);
        let inv = causal_invert(&OperatorLaurent::constant(a.clone()), 5).unwrap();
        assert_eq!(inv.series.band(), 0);
        assert!(linalg::frobenius(&(inv.series.coeff_or_zero(0) * &a - linalg::identity(2))) < 1e-15);
        let id = causal_invert(&OperatorLaurent::identity(3), 4).unwrap();
        assert_eq!(id.series, OperatorLaurent::identity(3));
        let sing = OperatorLaurent::scalar([(1, c(1.0))]);
        assert!(matches!(causal_invert(&sing, 3), Err(WnsError::SingularLeadCoefficient)));
        let noncausal = OperatorLaurent::scalar([(-1, c(1.0)), (0, c(1.0))]);
        assert!(causal_invert(&noncausal, 3).is_err());
    }

    #[test]
    fn quadratic_factor() {
        let s = OperatorLaurent::scalar([(-1, c(1.0)), (0, c(2.5)), (1, c(1.0))]);
        let (w, diag) = spectral_factorize(&s, &FactorOptions::default()).unwrap();
        assert!(diag.converged && diag.defect < 1e-10);
        assert!((scalar_at(&w, 0) - c(2f64.sqrt())).norm() < 1e-10);
        assert!((scalar_at(&w, 1) - c(0.5f64.sqrt())).norm() < 1e-10);
        assert!(w.filter_lags(|l| l > 1).wiener_norm() < 1e-10);
    }

    #[test]
    fn identity_factor() {
        let (w, diag) = spectral_factorize(&OperatorLaurent::identity(3), &FactorOptions::default()).unwrap();
        assert_eq!(diag.iterations, 0);
        assert!(w.distance(&OperatorLaurent::identity(3)).unwrap() < 1e-15);
    }

    #[test]
    fn matrix_factor_is_normalized() {
        let t0 = CMat::from_row_slice(2, 2, &[c(2.0), Complex64::new(0.3, 0.1), c(-0.4), c(1.5)]);
        let t1 = CMat::from_row_slice(2, 2, &[c(0.3), c(0.2), Complex64::new(0.0, -0.4), c(0.1)]);
        let t = OperatorLaurent::from_coeffs(2, 2, [(0, t0), (1, t1)]).unwrap();
        let s = t.para_adjoint().multiply(&t).unwrap();
        let (w, diag) = spectral_factorize(&s, &FactorOptions::default()).unwrap();
        assert!(diag.defect < 1e-10);
        let recon = w.para_adjoint().multiply(&w).unwrap();
        assert!(recon.distance(&s).unwrap() / s.wiener_norm() < 1e-10);
        let w0 = w.coeff_or_zero(0);
        assert!(w0[(0, 1)].norm() < 1e-12);
        assert!(w0[(0, 0)].re > 0.0 && w0[(1, 1)].re > 0.0);
        assert!(w0[(0, 0)].im.abs() < 1e-12 && w0[(1, 1)].im.abs() < 1e-12);
        assert!(w.is_causal());
    }

    #[test]
    fn rejects_bad_symbols() {
        let semidef = OperatorLaurent::scalar([(-1, c(1.0)), (0, c(2.0)), (1, c(1.0))]);
        assert!(matches!(
            spectral_factorize(&semidef, &FactorOptions::default()),
            Err(WnsError::NotPositive { .. })
        ));
        let skew = OperatorLaurent::scalar([(0, c(2.0)), (1, c(0.5))]);
        assert!(matches!(
            spectral_factorize(&skew, &FactorOptions::default()),
            Err(WnsError::NotHermitian { .. })
        ));
    }

    #[test]
    fn inverse_of_quadratic_symbol() {
        let s = OperatorLaurent::scalar([(-1, c(1.0)), (0, c(2.5)), (1, c(1.0))]);
        let (inv, diag) = invert_via_factorization(&s, 30).unwrap();
        for n in -30i64..=30 {
            let expected = (-0.5f64).powi(n.unsigned_abs() as i32) * 2.0 / 3.0;
            assert!((scalar_at(&inv, n) - c(expected)).norm() < 1e-10, "lag {n}");
        }
        assert!(diag.identity_defect < 1e-7);

        let (inv, _) = invert_via_factorization(&OperatorLaurent::identity(2).scale(c(4.0)), 3).unwrap();
        assert!(inv.distance(&OperatorLaurent::identity(2).scale(c(0.25))).unwrap() < 1e-15);
    }
}

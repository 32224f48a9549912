//! Operator-valued Laurent series on the unit circle.
//!
//! An [`OperatorLaurent`] is a finitely supported map `lag → matrix`, read as
//! `W(e^{iω}) = Σ_n A_n e^{iωn}`. Finite support places every series in the
//! Wiener algebra, with norm `Σ_n ‖A_n‖`.

mod circle;
mod factor;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};
use crate::linalg::{self, CMat};

pub use circle::{
    coefficients_from_samples, default_num_points, positivity_check, positivity_check_with,
    sample_circle, write_spectrum_csv, PositivityReport,
};
pub use factor::{
    causal_invert, invert_via_factorization, invert_via_factorization_with, spectral_factorize, CausalInverse, FactorDiagnostics,
    FactorOptions, InverseDiagnostics,
};

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorLaurent {
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<i64, CMat>,
}

fn is_exact_zero(m: &CMat) -> bool {
    m.iter().all(|z| *z == Complex64::default())
}

impl OperatorLaurent {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(linalg::identity(dim))
    }

    /// `{0: m}`.
    pub fn constant(m: CMat) -> Self {
        let mut out = Self::zero(m.nrows(), m.ncols());
        out.insert(0, m);
        out
    }

    pub fn from_coeffs<I>(rows: usize, cols: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, CMat)>,
    {
        let mut out = Self::zero(rows, cols);
        for (lag, m) in coeffs {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(WnsError::DimensionMismatch(format!(
                    "coefficient at lag {lag} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            out.accumulate(lag, &m);
        }
        Ok(out)
    }

    /// 1x1 series from `(lag, value)` pairs.
    pub fn scalar<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, Complex64)>,
    {
        let mut out = Self::zero(1, 1);
        for (lag, c) in terms {
            out.accumulate(lag, &CMat::from_element(1, 1, c));
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square series.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Replaces the coefficient at `lag`; exact zeros are not stored.
    pub fn insert(&mut self, lag: i64, m: CMat) {
        debug_assert_eq!((m.nrows(), m.ncols()), (self.rows, self.cols));
        if is_exact_zero(&m) {
            self.coeffs.remove(&lag);
        } else {
            self.coeffs.insert(lag, m);
        }
    }

    fn accumulate(&mut self, lag: i64, m: &CMat) {
        let sum = match self.coeffs.remove(&lag) {
            Some(prev) => prev + m,
            None => m.clone(),
        };
        self.insert(lag, sum);
    }

    pub fn coeff(&self, lag: i64) -> Option<&CMat> {
        self.coeffs.get(&lag)
    }

    pub fn coeff_or_zero(&self, lag: i64) -> CMat {
        self.coeffs
            .get(&lag)
            .cloned()
            .unwrap_or_else(|| linalg::zeros(self.rows, self.cols))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, &CMat)> {
        self.coeffs.iter().map(|(l, m)| (*l, m))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_lag(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_lag(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Largest `|lag|` carrying a stored coefficient.
    pub fn band(&self) -> usize {
        self.coeffs
            .keys()
            .map(|l| l.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn is_causal(&self) -> bool {
        self.min_lag().is_none_or(|l| l >= 0)
    }

    /// `Σ_n ‖A_n‖` with the operator norm.
    pub fn wiener_norm(&self) -> f64 {
        self.coeffs.values().map(linalg::op_norm).sum()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(WnsError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (lag, m) in &other.coeffs {
            out.accumulate(*lag, m);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (lag, m) in &other.coeffs {
            out.accumulate(*lag, &(-m));
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.rows, self.cols);
        for (lag, m) in &self.coeffs {
            out.insert(*lag, m * c);
        }
        out
    }

    /// Left-multiplies every coefficient by a constant matrix.
    pub fn left_mul(&self, m: &CMat) -> Result<Self> {
        if m.ncols() != self.rows {
            return Err(WnsError::DimensionMismatch("left factor".into()));
        }
        let mut out = Self::zero(m.nrows(), self.cols);
        for (lag, a) in &self.coeffs {
            out.insert(*lag, m * a);
        }
        Ok(out)
    }

    /// Right-multiplies every coefficient by a constant matrix.
    pub fn right_mul(&self, m: &CMat) -> Result<Self> {
        if m.nrows() != self.cols {
            return Err(WnsError::DimensionMismatch("right factor".into()));
        }
        let mut out = Self::zero(self.rows, m.ncols());
        for (lag, a) in &self.coeffs {
            out.insert(*lag, a * m);
        }
        Ok(out)
    }

    /// Cauchy product `C_n = Σ_m A_m B_{n−m}`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(WnsError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc: BTreeMap<i64, CMat> = BTreeMap::new();
        for (la, a) in &self.coeffs {
            for (lb, b) in &other.coeffs {
                let prod = a * b;
                acc.entry(la + lb)
                    .and_modify(|c| *c += &prod)
                    .or_insert(prod);
            }
        }
        let mut out = Self::zero(self.rows, other.cols);
        for (lag, m) in acc {
            out.insert(lag, m);
        }
        Ok(out)
    }

    /// Coefficient `n` becomes `A_{−n}*`; on the circle this is `W(e^{iω})*`.
    pub fn para_adjoint(&self) -> Self {
        let mut out = Self::zero(self.cols, self.rows);
        for (lag, m) in &self.coeffs {
            out.insert(-lag, m.adjoint());
        }
        out
    }

    /// Keeps lags `>= 0`.
    pub fn causal_part(&self) -> Self {
        self.filter_lags(|l| l >= 0)
    }

    /// Keeps lags `< 0`; `causal_part + strictly_anticausal_part` is the identity.
    pub fn strictly_anticausal_part(&self) -> Self {
        self.filter_lags(|l| l < 0)
    }

    /// Keeps `|lag| <= band`.
    pub fn truncate(&self, band: usize) -> Self {
        let b = band as i64;
        self.filter_lags(|l| (-b..=b).contains(&l))
    }

    pub fn filter_lags(&self, keep: impl Fn(i64) -> bool) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(l, _)| keep(**l))
                .map(|(l, m)| (*l, m.clone()))
                .collect(),
        }
    }

    /// `Σ_n ‖A_{−n} − A_n*‖`, zero exactly when the series is self-adjoint on the circle.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.sub(&self.para_adjoint())
            .map(|d| d.wiener_norm())
            .unwrap_or(f64::INFINITY)
    }

    /// `‖self − other‖_wiener`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.wiener_norm())
    }

    /// Largest entry deviation of any coefficient from a multiple of the identity.
    pub fn max_dev_from_scalar(&self) -> f64 {
        self.coeffs
            .values()
            .map(|m| linalg::max_dev_from_scalar_identity(m, m[(0, 0)]))
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffRepr {
    lag: i64,
    matrix: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct LaurentRepr {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    coeffs: Vec<CoeffRepr>,
}

impl Serialize for OperatorLaurent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        LaurentRepr {
            dim: self.rows,
            cols: (!self.is_square()).then_some(self.cols),
            coeffs: self
                .coeffs
                .iter()
                .map(|(lag, m)| CoeffRepr {
                    lag: *lag,
                    matrix: (0..m.nrows())
                        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
                        .collect(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorLaurent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = LaurentRepr::deserialize(deserializer)?;
        let rows = repr.dim;
        let cols = repr.cols.unwrap_or(rows);
        let mut coeffs = Vec::with_capacity(repr.coeffs.len());
        for c in repr.coeffs {
            if c.matrix.len() != rows * cols {
                return Err(D::Error::custom(format!(
                    "lag {} has {} entries, expected {}",
                    c.lag,
                    c.matrix.len(),
                    rows * cols
                )));
            }
            coeffs.push((c.lag, CMat::from_row_slice(rows, cols, &c.matrix)));
        }
        Self::from_coeffs(rows, cols, coeffs).map_err(D::Error::custom)
    }
}

pub fn wiener_norm(w: &OperatorLaurent) -> f64 {
    w.wiener_norm()
}

pub fn multiply(a: &OperatorLaurent, b: &OperatorLaurent) -> Result<OperatorLaurent> {
    a.multiply(b)
}

/// Same product as [`multiply`], through circle samples when the operands are long.
pub fn multiply_fast(a: &OperatorLaurent, b: &OperatorLaurent) -> Result<OperatorLaurent> {
    circle::fast_multiply(a, b)
}

pub fn para_adjoint(w: &OperatorLaurent) -> OperatorLaurent {
    w.para_adjoint()
}

pub fn causal_part(w: &OperatorLaurent) -> OperatorLaurent {
    w.causal_part()
}

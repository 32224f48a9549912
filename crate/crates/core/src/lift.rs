//! Random variables as Wick-multiplication operators on truncated bases of `H_k`.
//!
//! The orthonormal basis of `H_k` is `e_α = (2N)^{kα/2} H_α`. Since
//! `x ∘ e_α = Σ_γ x_γ (2N)^{−kγ/2} e_{α+γ}`, the matrix of `M_x` has entry
//! `x_{β−α} (2N)^{−k(β−α)/2}` at `(β, α)`. All correlation operators are
//! computed through an output basis padded by the degree of the signal, so
//! `M*_{y} M_{x}` compressed to the degree-`W` input basis is exact.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chaos::{KondratievElement, MultiIndex, TruncationSpec};
use crate::error::{Result, WnsError};
use crate::linalg::{self, CMat};

pub const DEFAULT_BASIS_CAP: usize = 100_000;

/// Default absolute tolerance on operator norms for stationarity.
pub const DEFAULT_STATIONARITY_TOL: f64 = 1e-10;

/// Graded-lexicographic enumeration of `{ α : positions ≤ d, |α| ≤ W }`.
///
/// The vacuum has ordinal 0, and the enumeration for degree `W` is a prefix
/// of the enumeration for any larger degree.
#[derive(Clone, Debug)]
pub struct BasisEnumeration {
    num_vars: u32,
    max_degree: u32,
    indices: Vec<MultiIndex>,
    ordinals: HashMap<MultiIndex, usize>,
}

impl PartialEq for BasisEnumeration {
    fn eq(&self, other: &Self) -> bool {
        self.num_vars == other.num_vars && self.max_degree == other.max_degree
    }
}

impl BasisEnumeration {
    pub fn new(num_vars: u32, max_degree: u32) -> Result<Self> {
        Self::with_cap(num_vars, max_degree, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(num_vars: u32, max_degree: u32, cap: usize) -> Result<Self> {
        if num_vars == 0 {
            return Err(WnsError::InvalidTruncation("num_vars must be positive".into()));
        }
        let size = crate::chaos::binomial(
            u64::from(num_vars) + u64::from(max_degree),
            u64::from(max_degree),
        );
        if size > cap as u128 {
            return Err(WnsError::TruncationTooLarge {
                size: usize::try_from(size).unwrap_or(usize::MAX),
                cap,
            });
        }
        let mut indices = Vec::with_capacity(size as usize);
        let mut dense = vec![0u32; num_vars as usize];
        for degree in 0..=max_degree {
            compositions(&mut dense, 0, degree, &mut indices);
        }
        let ordinals = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        Ok(Self {
            num_vars,
            max_degree,
            indices,
            ordinals,
        })
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, ordinal: usize) -> &MultiIndex {
        &self.indices[ordinal]
    }

    pub fn ordinal(&self, alpha: &MultiIndex) -> Option<usize> {
        self.ordinals.get(alpha).copied()
    }
}

/// Appends every dense vector with the given tail sum, first entries largest first.
fn compositions(dense: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == dense.len() {
        dense[pos] = remaining;
        out.push(MultiIndex::from_dense(dense));
        dense[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        dense[pos] = e;
        compositions(dense, pos + 1, remaining - e, out);
    }
    dense[pos] = 0;
}

pub fn enumerate_basis(spec: &TruncationSpec) -> Result<BasisEnumeration> {
    BasisEnumeration::new(spec.num_vars, spec.max_degree)
}

/// Matrix of a bounded operator between truncated orthonormal bases of `H_k`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub matrix: CMat,
    pub basis_in: Arc<BasisEnumeration>,
    pub basis_out: Arc<BasisEnumeration>,
    pub k: i32,
}

impl OperatorMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Conjugate transpose with the bases swapped.
    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            basis_in: self.basis_out.clone(),
            basis_out: self.basis_in.clone(),
            k: self.k,
        }
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(&self.matrix)
    }

    /// `self · other`, where `other` maps into the input basis of `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.basis_in.len() != other.basis_out.len() {
            return Err(WnsError::DimensionMismatch(format!(
                "cannot compose {}x{} after {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            basis_in: other.basis_in.clone(),
            basis_out: self.basis_out.clone(),
            k: self.k,
        })
    }

    /// Applies the operator to the vacuum and maps coordinates back to chaos
    /// coefficients, `c_β = coord_β (2N)^{kβ/2}`.
    pub fn extract_symbol(&self) -> KondratievElement {
        extract_symbol_from(&self.matrix, &self.basis_out, self.k)
    }
}

pub fn adjoint(m: &OperatorMatrix) -> OperatorMatrix {
    m.adjoint()
}

pub fn extract_symbol(m: &OperatorMatrix) -> KondratievElement {
    m.extract_symbol()
}

/// Symbol of a raw matrix whose rows are indexed by `basis_out` and whose
/// column 0 is the vacuum.
pub fn extract_symbol_from(matrix: &CMat, basis_out: &BasisEnumeration, k: i32) -> KondratievElement {
    if matrix.ncols() == 0 {
        return KondratievElement::zero();
    }
    KondratievElement::from_terms((0..matrix.nrows()).map(|row| {
        let beta = basis_out.index(row);
        let scale = (0.5 * f64::from(k) * beta.log_weight()).exp();
        (beta.clone(), matrix[(row, 0)] * scale)
    }))
}

fn check_variables(x: &KondratievElement, num_vars: u32) -> Result<()> {
    let position = x.max_position();
    if position > num_vars {
        return Err(WnsError::VariableOutOfRange { position, num_vars });
    }
    Ok(())
}

/// Raw matrix of `M_x` from `basis_in` to `basis_out`.
///
/// Terms landing outside `basis_out` are dropped, which is exact whenever
/// `basis_out` has degree at least `basis_in` degree + `deg x`.
pub fn mult_matrix(
    x: &KondratievElement,
    basis_in: &BasisEnumeration,
    basis_out: &BasisEnumeration,
    k: i32,
) -> Result<CMat> {
    check_variables(x, basis_in.num_vars().min(basis_out.num_vars()))?;
    let mut m = linalg::zeros(basis_out.len(), basis_in.len());
    let scaled: Vec<(&MultiIndex, Complex64)> = x
        .terms()
        .map(|(g, c)| (g, c * (-0.5 * f64::from(k) * g.log_weight()).exp()))
        .collect();
    for (col, alpha) in basis_in.indices().iter().enumerate() {
        for &(gamma, c) in &scaled {
            if let Some(row) = basis_out.ordinal(&alpha.add(gamma)) {
                m[(row, col)] += c;
            }
        }
    }
    Ok(m)
}

pub fn mult_operator(
    x: &KondratievElement,
    basis_in: &Arc<BasisEnumeration>,
    basis_out: &Arc<BasisEnumeration>,
    k: i32,
) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix {
        matrix: mult_matrix(x, basis_in, basis_out, k)?,
        basis_in: basis_in.clone(),
        basis_out: basis_out.clone(),
        k,
    })
}

/// `M_x` with the output basis padded by `deg x`, so no term is lost.
pub fn mult_operator_exact(
    x: &KondratievElement,
    basis_in: &Arc<BasisEnumeration>,
    k: i32,
) -> Result<OperatorMatrix> {
    let out_degree = basis_in.max_degree() + x.degree() as u32;
    let basis_out = Arc::new(BasisEnumeration::new(basis_in.num_vars(), out_degree)?);
    mult_operator(x, basis_in, &basis_out, k)
}

/// Stationary (or not) discrete-time process with values in `S_{-1}`.
///
/// * `deterministic`: scalars `c_n` on `[start, start + len)`, zero elsewhere,
///   lifted as `c_n · I`.
/// * `modulated`: `x_n = λⁿ ρ` with `|λ| = 1`.
/// * `wick_ma`: `y_n = Σ_m h_{n−m} ∘ x_m` with taps `h_start, h_{start+1}, ...`.
/// * `white`: innovations whose correlation operator is `σ² δ(m) I` on every
///   truncation. All `white` leaves of a model refer to one innovation source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    Deterministic {
        #[serde(default)]
        start: i64,
        values: Vec<Complex64>,
    },
    Modulated {
        lambda: Complex64,
        rho: KondratievElement,
    },
    WickMa {
        #[serde(default)]
        start: i64,
        taps: Vec<KondratievElement>,
        input: Box<ProcessSpec>,
    },
    White {
        variance: f64,
    },
}

/// Tolerance on `||λ| − 1|` for modulated processes.
pub const UNIMODULAR_TOL: f64 = 1e-12;

impl ProcessSpec {
    pub fn white(variance: f64) -> Self {
        Self::White { variance }
    }

    pub fn wick_ma(start: i64, taps: Vec<KondratievElement>, input: ProcessSpec) -> Self {
        Self::WickMa {
            start,
            taps,
            input: Box::new(input),
        }
    }

    /// Checks the variable budget and the modulation modulus.
    pub fn validate(&self, spec: &TruncationSpec) -> Result<()> {
        match self {
            Self::Deterministic { values, .. } => {
                if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(WnsError::Invalid("non-finite deterministic value".into()));
                }
                Ok(())
            }
            Self::Modulated { lambda, rho } => {
                let modulus = lambda.norm();
                if (modulus - 1.0).abs() > UNIMODULAR_TOL {
                    return Err(WnsError::NonUnimodularModulation { modulus });
                }
                check_variables(rho, spec.num_vars)
            }
            Self::WickMa { taps, input, .. } => {
                for h in taps {
                    check_variables(h, spec.num_vars)?;
                }
                input.validate(spec)
            }
            Self::White { variance } => {
                if !(*variance > 0.0) || !variance.is_finite() {
                    return Err(WnsError::Invalid(format!(
                        "white variance must be positive, got {variance}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Chaos degree by which this process raises the degree of a basis element.
    pub fn chaos_degree(&self) -> u32 {
        match self {
            Self::Deterministic { .. } | Self::White { .. } => 0,
            Self::Modulated { rho, .. } => rho.degree() as u32,
            Self::WickMa { taps, input, .. } => {
                taps.iter().map(|h| h.degree() as u32).max().unwrap_or(0) + input.chaos_degree()
            }
        }
    }

    pub fn max_position(&self) -> u32 {
        match self {
            Self::Deterministic { .. } | Self::White { .. } => 0,
            Self::Modulated { rho, .. } => rho.max_position(),
            Self::WickMa { taps, input, .. } => taps
                .iter()
                .map(KondratievElement::max_position)
                .max()
                .unwrap_or(0)
                .max(input.max_position()),
        }
    }

    /// True when every element involved is a scalar multiple of `H_∅`.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Self::Deterministic { .. } | Self::White { .. } => true,
            Self::Modulated { rho, .. } => rho.is_deterministic(),
            Self::WickMa { taps, input, .. } => {
                taps.iter().all(KondratievElement::is_deterministic) && input.is_deterministic()
            }
        }
    }

    /// True when the process is a Wick moving average over `white` leaves.
    pub fn driven_by_white(&self) -> bool {
        match self {
            Self::White { .. } => true,
            Self::WickMa { input, .. } => input.driven_by_white(),
            _ => false,
        }
    }

    /// The element `x_n`, when the process has a realization.
    ///
    /// `white` innovations have no realization in `S_{-1}`; `None` is
    /// returned for them and for anything driven by them.
    pub fn realize(&self, n: i64) -> Option<KondratievElement> {
        match self {
            Self::Deterministic { start, values } => {
                let v = usize::try_from(n - start)
                    .ok()
                    .and_then(|i| values.get(i).copied())
                    .unwrap_or_default();
                Some(KondratievElement::scalar(v))
            }
            Self::Modulated { lambda, rho } => Some(rho.scale(lambda.powi(n as i32))),
            Self::WickMa { start, taps, input } => {
                let mut acc = KondratievElement::zero();
                for (i, h) in taps.iter().enumerate() {
                    let t = start + i as i64;
                    acc = acc.add(&h.wick(&input.realize(n - t)?));
                }
                Some(acc)
            }
            Self::White { .. } => None,
        }
    }
}

/// Shared basis cache and correlation engine for one `(num_vars, k)` pair.
pub struct Lifter {
    num_vars: u32,
    k: i32,
    cap: usize,
    bases: Mutex<BTreeMap<u32, Arc<BasisEnumeration>>>,
}

impl Lifter {
    pub fn new(spec: &TruncationSpec) -> Self {
        Self::with_cap(spec, DEFAULT_BASIS_CAP)
    }

    pub fn with_cap(spec: &TruncationSpec, cap: usize) -> Self {
        Self {
            num_vars: spec.num_vars,
            k: spec.k,
            cap,
            bases: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn basis(&self, degree: u32) -> Result<Arc<BasisEnumeration>> {
        let mut cache = self.bases.lock().expect("basis cache poisoned");
        if let Some(b) = cache.get(&degree) {
            return Ok(b.clone());
        }
        let b = Arc::new(BasisEnumeration::with_cap(self.num_vars, degree, self.cap)?);
        cache.insert(degree, b.clone());
        Ok(b)
    }

    /// `M_x` from the degree-`deg_in` basis to the degree-`deg_in + deg x` basis.
    pub fn lift(&self, x: &KondratievElement, deg_in: u32) -> Result<CMat> {
        let b_in = self.basis(deg_in)?;
        let b_out = self.basis(deg_in + x.degree() as u32)?;
        mult_matrix(x, &b_in, &b_out, self.k)
    }

    /// Square `M_x` on the degree-`deg` basis (compression, not exact).
    pub fn lift_square(&self, x: &KondratievElement, deg: u32) -> Result<CMat> {
        let b = self.basis(deg)?;
        mult_matrix(x, &b, &b, self.k)
    }

    fn embedding(&self, rows_deg: u32, cols_deg: u32) -> Result<CMat> {
        let r = self.basis(rows_deg)?.len();
        let c = self.basis(cols_deg)?.len();
        Ok(CMat::from_fn(r, c, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        }))
    }

    /// `M*_{q_n} M_{p_m}` with rows on the degree-`deg_q` basis and columns on
    /// the degree-`deg_p` basis; `None` means the exact zero operator.
    fn cross_gram(
        &self,
        p: &ProcessSpec,
        q: &ProcessSpec,
        n: i64,
        m: i64,
        deg_q: u32,
        deg_p: u32,
    ) -> Result<Option<CMat>> {
        if let ProcessSpec::WickMa { start, taps, input } = p {
            let dh = taps.iter().map(|h| h.degree() as u32).max().unwrap_or(0);
            let mut acc: Option<CMat> = None;
            for (i, h) in taps.iter().enumerate() {
                if h.is_zero() {
                    continue;
                }
                let s = start + i as i64;
                if let Some(inner) = self.cross_gram(input, q, n, m - s, deg_q, deg_p + dh)? {
                    let b_in = self.basis(deg_p)?;
                    let b_out = self.basis(deg_p + dh)?;
                    let mh = mult_matrix(h, &b_in, &b_out, self.k)?;
                    let term = inner * mh;
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
            }
            return Ok(acc);
        }
        if let ProcessSpec::WickMa { start, taps, input } = q {
            let dg = taps.iter().map(|h| h.degree() as u32).max().unwrap_or(0);
            let mut acc: Option<CMat> = None;
            for (i, g) in taps.iter().enumerate() {
                if g.is_zero() {
                    continue;
                }
                let t = start + i as i64;
                if let Some(inner) = self.cross_gram(p, input, n - t, m, deg_q + dg, deg_p)? {
                    let b_in = self.basis(deg_q)?;
                    let b_out = self.basis(deg_q + dg)?;
                    let mg = mult_matrix(g, &b_in, &b_out, self.k)?;
                    let term = mg.adjoint() * inner;
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
            }
            return Ok(acc);
        }
        match (p, q) {
            (ProcessSpec::White { variance: vp }, ProcessSpec::White { variance: vq }) => {
                if n != m {
                    return Ok(None);
                }
                let e = self.embedding(deg_q, deg_p)?;
                Ok(Some(e.scale((vp * vq).sqrt())))
            }
            (ProcessSpec::White { .. }, _) | (_, ProcessSpec::White { .. }) => {
                Err(WnsError::IncompatibleSources(
                    "white innovations cannot be correlated with a realized process".into(),
                ))
            }
            _ => {
                let a = p.realize(m).expect("leaf processes are realizable");
                let b = q.realize(n).expect("leaf processes are realizable");
                if a.is_zero() || b.is_zero() {
                    return Ok(None);
                }
                let out = (deg_p + a.degree() as u32).max(deg_q + b.degree() as u32);
                let b_out = self.basis(out)?;
                let ma = mult_matrix(&a, &*self.basis(deg_p)?, &b_out, self.k)?;
                let mb = mult_matrix(&b, &*self.basis(deg_q)?, &b_out, self.k)?;
                Ok(Some(mb.adjoint() * ma))
            }
        }
    }

    /// Exact `M*_{q_n} M_{p_m}` on the degree-`degree` basis.
    pub fn cross_matrix(
        &self,
        p: &ProcessSpec,
        q: &ProcessSpec,
        n: i64,
        m: i64,
        degree: u32,
    ) -> Result<CMat> {
        let dim = self.basis(degree)?.len();
        Ok(self
            .cross_gram(p, q, n, m, degree, degree)?
            .unwrap_or_else(|| linalg::zeros(dim, dim)))
    }

    pub fn correlation_matrix(&self, p: &ProcessSpec, n: i64, m: i64, degree: u32) -> Result<CMat> {
        self.cross_matrix(p, p, n, m, degree)
    }
}

fn wrap(lifter: &Lifter, matrix: CMat, degree: u32) -> Result<OperatorMatrix> {
    let b = lifter.basis(degree)?;
    Ok(OperatorMatrix {
        matrix,
        basis_in: b.clone(),
        basis_out: b,
        k: lifter.k,
    })
}

/// `M*_{x_n} M_{x_m}` on the degree-`W` basis of `spec`.
pub fn correlation(p: &ProcessSpec, n: i64, m: i64, spec: &TruncationSpec) -> Result<OperatorMatrix> {
    p.validate(spec)?;
    let lifter = Lifter::new(spec);
    let mat = lifter.correlation_matrix(p, n, m, spec.max_degree)?;
    wrap(&lifter, mat, spec.max_degree)
}

/// `M*_{q_n} M_{p_m}`, the cross-correlation `R_{pq}(m − n)`.
pub fn cross_correlation(
    p: &ProcessSpec,
    q: &ProcessSpec,
    n: i64,
    m: i64,
    spec: &TruncationSpec,
) -> Result<OperatorMatrix> {
    p.validate(spec)?;
    q.validate(spec)?;
    let lifter = Lifter::new(spec);
    let mat = lifter.cross_matrix(p, q, n, m, spec.max_degree)?;
    wrap(&lifter, mat, spec.max_degree)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub window: i64,
    /// `(lag, max_n ‖R(n, n+lag) − R_ref(lag)‖)`.
    pub spreads: Vec<(i64, f64)>,
    pub max_spread: f64,
    pub tol: f64,
    pub stationary: bool,
}

pub fn stationarity_check(
    p: &ProcessSpec,
    window: i64,
    spec: &TruncationSpec,
    tol: f64,
) -> Result<StationarityReport> {
    p.validate(spec)?;
    stationarity_check_with(&Lifter::new(spec), p, window, spec.max_degree, tol)
}

pub(crate) fn stationarity_check_with(
    lifter: &Lifter,
    p: &ProcessSpec,
    window: i64,
    degree: u32,
    tol: f64,
) -> Result<StationarityReport> {
    if window < 2 {
        return Err(WnsError::Invalid(format!("stationarity window must be >= 2, got {window}")));
    }
    let mut cache: HashMap<(i64, i64), CMat> = HashMap::new();
    let mut get = |n: i64, m: i64| -> Result<CMat> {
        if let Some(c) = cache.get(&(n, m)) {
            return Ok(c.clone());
        }
        let c = lifter.correlation_matrix(p, n, m, degree)?;
        cache.insert((n, m), c.clone());
        Ok(c)
    };
    let mut spreads = Vec::new();
    let mut max_spread: f64 = 0.0;
    for lag in -2 * window..=2 * window {
        let lo = (-window).max(-window - lag);
        let hi = window.min(window - lag);
        let ref_n = if lag.abs() <= window { 0 } else { lo };
        let reference = get(ref_n, ref_n + lag)?;
        let mut spread: f64 = 0.0;
        for n in lo..=hi {
            let r = get(n, n + lag)?;
            spread = spread.max(linalg::op_norm(&(r - &reference)));
        }
        max_spread = max_spread.max(spread);
        spreads.push((lag, spread));
    }
    Ok(StationarityReport {
        window,
        spreads,
        max_spread,
        tol,
        stationary: max_spread <= tol,
    })
}

#[derive(Serialize, Deserialize)]
struct OperatorMatrixRepr {
    rows: usize,
    cols: usize,
    k: i32,
    num_vars: u32,
    basis_in: Vec<Vec<u32>>,
    basis_out: Vec<Vec<u32>>,
    entries: Vec<Complex64>,
}

impl Serialize for OperatorMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                entries.push(self.matrix[(i, j)]);
            }
        }
        OperatorMatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            k: self.k,
            num_vars: self.basis_in.num_vars(),
            basis_in: self.basis_in.indices().iter().map(MultiIndex::to_dense).collect(),
            basis_out: self.basis_out.indices().iter().map(MultiIndex::to_dense).collect(),
            entries,
        }
        .serialize(serializer)
    }
}

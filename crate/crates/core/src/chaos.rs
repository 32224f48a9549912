//! Chaos-expansion algebra on the Hermite basis `H_α`.
//!
//! Elements of the Kondratiev space are stored as sparse maps from
//! multi-indices to complex coefficients. The Wick product acts on the
//! basis by index addition, `H_α ∘ H_β = H_{α+β}`, so every product of
//! finitely supported elements is again finitely supported and is
//! computed exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};

/// Coefficients whose magnitude falls below this are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-300;

/// Largest argument accepted by `f64::exp` without overflow.
const LOG_F64_MAX: f64 = 709.782_712_893_384;

/// Finitely supported sequence of nonnegative integers.
///
/// Stored sparsely as `(position, exponent)` pairs with positions
/// (1-based) strictly increasing and exponents strictly positive.
/// Ordering is graded-lexicographic: total degree first, then the dense
/// vectors compared from position 1 with the larger exponent first, so
/// that `(1) < (0,1)` and `(2) < (1,1) < (0,2)`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<(u32, u32)>,
}

impl MultiIndex {
    /// The empty index; `H_∅ = 1`.
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// `ε_j`, the index with a single 1 at `position`.
    pub fn unit(position: u32) -> Self {
        assert!(position >= 1, "positions are 1-based");
        Self {
            entries: vec![(position, 1)],
        }
    }

    /// Builds an index from its dense prefix `[α_1, α_2, ...]`.
    pub fn from_dense(dense: &[u32]) -> Self {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i as u32 + 1, e))
            .collect();
        Self { entries }
    }

    /// Builds an index from sparse pairs; zero exponents are skipped.
    pub fn from_sparse<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for (pos, exp) in pairs {
            if pos == 0 {
                return Err(WnsError::Invalid("multi-index positions are 1-based".into()));
            }
            if let Some(&(last, _)) = entries.last() {
                if pos <= last {
                    return Err(WnsError::Invalid(
                        "multi-index positions must be strictly increasing".into(),
                    ));
                }
            }
            if exp > 0 {
                entries.push((pos, exp));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    /// Dense prefix with trailing zeros omitted.
    pub fn to_dense(&self) -> Vec<u32> {
        let mut dense = vec![0; self.max_position() as usize];
        for &(pos, exp) in &self.entries {
            dense[pos as usize - 1] = exp;
        }
        dense
    }

    pub fn is_vacuum(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total degree `|α|`.
    pub fn degree(&self) -> u64 {
        self.entries.iter().map(|&(_, e)| u64::from(e)).sum()
    }

    /// Largest position carrying a nonzero exponent (0 for the vacuum).
    pub fn max_position(&self) -> u32 {
        self.entries.last().map_or(0, |&(p, _)| p)
    }

    pub fn exponent(&self, position: u32) -> u32 {
        self.entries
            .binary_search_by_key(&position, |&(p, _)| p)
            .map_or(0, |i| self.entries[i].1)
    }

    /// Componentwise sum `α + β`.
    pub fn add(&self, other: &Self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (pa, ea) = self.entries[i];
            let (pb, eb) = other.entries[j];
            match pa.cmp(&pb) {
                Ordering::Less => {
                    entries.push((pa, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    entries.push((pb, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    entries.push((pa, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        entries.extend_from_slice(&self.entries[i..]);
        entries.extend_from_slice(&other.entries[j..]);
        Self { entries }
    }

    /// `α − β` when `β ≤ α` componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut j = 0;
        for &(pa, ea) in &self.entries {
            let mut eb = 0;
            if j < other.entries.len() {
                let (pb, e) = other.entries[j];
                if pb < pa {
                    return None;
                }
                if pb == pa {
                    eb = e;
                    j += 1;
                }
            }
            match ea.cmp(&eb) {
                Ordering::Less => return None,
                Ordering::Equal => {}
                Ordering::Greater => entries.push((pa, ea - eb)),
            }
        }
        if j < other.entries.len() {
            return None;
        }
        Some(Self { entries })
    }

    /// `ln (2N)^α = Σ_j α_j ln(2j)`.
    pub fn log_weight(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(p, e)| f64::from(e) * (2.0 * f64::from(p)).ln())
            .sum()
    }

    /// `α! = Π_j α_j!` as a float; `None` on overflow.
    pub fn factorial(&self) -> Option<f64> {
        let mut acc = 1.0_f64;
        for &(_, e) in &self.entries {
            for i in 2..=e {
                acc *= f64::from(i);
            }
        }
        acc.is_finite().then_some(acc)
    }

    fn log_factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, e)| (2..=e).map(|i| f64::from(i).ln()).sum::<f64>())
            .sum()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Walk positions in increasing order; a larger exponent sorts first.
        let (mut i, mut j) = (0, 0);
        loop {
            let a = self.entries.get(i).copied();
            let b = other.entries.get(j).copied();
            match (a, b) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some((pa, ea)), Some((pb, eb))) => match pa.cmp(&pb) {
                    Ordering::Less => return Ordering::Less,
                    Ordering::Greater => return Ordering::Greater,
                    Ordering::Equal => match eb.cmp(&ea) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_dense())
    }
}

/// `(2N)^{kα}`, evaluated in the log domain.
pub fn weight(alpha: &MultiIndex, k: i32) -> Result<f64> {
    let log_value = f64::from(k) * alpha.log_weight();
    if log_value > LOG_F64_MAX {
        return Err(WnsError::WeightOverflow { log_value });
    }
    Ok(log_value.exp())
}

/// Sparse chaos expansion `Σ c_α H_α`.
#[derive(Clone, Default, PartialEq)]
pub struct KondratievElement {
    terms: BTreeMap<MultiIndex, Complex64>,
}

impl KondratievElement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c · H_∅`, a deterministic element.
    pub fn scalar(c: impl Into<Complex64>) -> Self {
        Self::monomial(MultiIndex::vacuum(), c)
    }

    /// `c · H_α`.
    pub fn monomial(alpha: MultiIndex, c: impl Into<Complex64>) -> Self {
        let mut out = Self::zero();
        out.add_term(alpha, c.into());
        out
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, Complex64)>,
    {
        let mut out = Self::zero();
        for (alpha, c) in terms {
            out.add_term(alpha, c);
        }
        out
    }

    /// Accumulates `c` into the coefficient of `H_α`, pruning zeros.
    pub fn add_term(&mut self, alpha: MultiIndex, c: Complex64) {
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().norm() < PRUNE_THRESHOLD {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.norm() >= PRUNE_THRESHOLD {
                    v.insert(c);
                }
            }
        }
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Complex64 {
        self.terms.get(alpha).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the support is at most the vacuum.
    pub fn is_deterministic(&self) -> bool {
        self.terms.keys().all(MultiIndex::is_vacuum)
    }

    /// Largest total degree in the support (0 for the zero element).
    pub fn degree(&self) -> u64 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    /// Largest chaos variable used.
    pub fn max_position(&self) -> u32 {
        self.terms.keys().map(MultiIndex::max_position).max().unwrap_or(0)
    }

    /// Coefficient of the vacuum, `g_0`.
    pub fn vacuum_coeff(&self) -> Complex64 {
        self.coeff(&MultiIndex::vacuum())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|(a, v)| (a.clone(), v * c)))
    }

    pub fn conj(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(a, v)| (a.clone(), v.conj())))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, v) in &other.terms {
            out.add_term(a.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, v) in &other.terms {
            out.add_term(a.clone(), -v);
        }
        out
    }

    /// Wick product `Σ_{α,β} c_α d_β H_{α+β}`.
    pub fn wick(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b), ca * cb);
            }
        }
        out
    }

    /// `‖f‖_k = (Σ |c_α|² (2N)^{−kα})^{1/2}`.
    ///
    /// Negative `k` is evaluated with the same formula.
    pub fn hk_norm(&self, k: i32) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| c.norm_sqr() * (-f64::from(k) * a.log_weight()).exp())
            .sum::<f64>()
            .sqrt()
    }

    /// `(Σ |c_α|² α!)^{1/2}`, the norm in the L² white-noise space.
    pub fn l2w_norm(&self) -> Result<f64> {
        let mut acc = 0.0;
        for (a, c) in &self.terms {
            let fact = a.factorial().ok_or(WnsError::WeightOverflow {
                log_value: a.log_factorial(),
            })?;
            acc += c.norm_sqr() * fact;
        }
        Ok(acc.sqrt())
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other)
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Keeps only terms of total degree `<= max_degree`.
    pub fn truncate_degree(&self, max_degree: u64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(a, _)| a.degree() <= max_degree)
                .map(|(a, c)| (a.clone(), *c)),
        )
    }
}

impl fmt::Debug for KondratievElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// `c · H_∅`.
pub fn scalar_embed(c: impl Into<Complex64>) -> KondratievElement {
    KondratievElement::scalar(c)
}

/// Free-function form of [`KondratievElement::wick`].
pub fn wick_product(f: &KondratievElement, g: &KondratievElement) -> KondratievElement {
    f.wick(g)
}

pub fn hk_norm(f: &KondratievElement, k: i32) -> f64 {
    f.hk_norm(k)
}

pub fn l2w_norm(f: &KondratievElement) -> Result<f64> {
    f.l2w_norm()
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    alpha: Vec<u32>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    terms: Vec<TermRepr>,
}

impl Serialize for KondratievElement {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr {
            terms: self
                .terms
                .iter()
                .map(|(a, c)| TermRepr {
                    alpha: a.to_dense(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KondratievElement {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(deserializer)?;
        Ok(Self::from_terms(repr.terms.into_iter().map(|t| {
            (MultiIndex::from_dense(&t.alpha), Complex64::new(t.re, t.im))
        })))
    }
}

/// Finite-dimensional truncation of the chaos basis plus the space parameters.
///
/// The truncated index set is `{ α : positions ≤ num_vars, |α| ≤ max_degree }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub num_vars: u32,
    pub max_degree: u32,
    pub k: i32,
    pub ell: i32,
}

impl TruncationSpec {
    pub const DEFAULT_K: i32 = 3;
    pub const DEFAULT_ELL: i32 = 1;

    pub fn new(num_vars: u32, max_degree: u32, k: i32, ell: i32) -> Result<Self> {
        let spec = Self {
            num_vars,
            max_degree,
            k,
            ell,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Truncation with the default `(ℓ, k) = (1, 3)`.
    pub fn with_defaults(num_vars: u32, max_degree: u32) -> Self {
        Self {
            num_vars,
            max_degree,
            k: Self::DEFAULT_K,
            ell: Self::DEFAULT_ELL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(WnsError::InvalidTruncation("num_vars must be positive".into()));
        }
        if self.k < 1 || self.ell < 1 {
            return Err(WnsError::InvalidTruncation("k and ell must be positive".into()));
        }
        if self.k <= self.ell + 1 {
            return Err(WnsError::InvalidTruncation(format!(
                "need k > ell + 1, got k = {}, ell = {}",
                self.k, self.ell
            )));
        }
        Ok(())
    }

    /// Same space parameters, different degree cap.
    pub fn with_degree(&self, max_degree: u32) -> Self {
        Self { max_degree, ..*self }
    }

    /// `C(d + W, W)`.
    pub fn basis_size(&self) -> u128 {
        binomial(
            u64::from(self.num_vars) + u64::from(self.max_degree),
            u64::from(self.max_degree),
        )
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Bernoulli numbers `B_2, B_4, ..., B_12`.
const BERNOULLI_EVEN: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// `Σ_{j ≥ a} j^{−s}` by Euler–Maclaurin, for integer `a` well above `s / 2π`.
fn hurwitz_tail(s: f64, a: f64) -> f64 {
    let mut sum = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s (s+1) ... (s+2k-2) over (2k)!
    let mut rising = s;
    let mut fact = 2.0;
    for (idx, b) in BERNOULLI_EVEN.iter().enumerate() {
        let k = idx as f64 + 1.0;
        sum += b / fact * rising * a.powf(-s - 2.0 * k + 1.0);
        rising *= (s + 2.0 * k - 1.0) * (s + 2.0 * k);
        fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    sum
}

/// Number of explicit factors taken in the Våge product before the tail.
const VAGE_EXPLICIT_FACTORS: u32 = 64;

/// `A(gap) = (Σ_α (2N)^{−gap·α})^{1/2}`.
///
/// Uses `Σ_α q^α = Π_{j≥1} (1 − (2j)^{−gap})^{−1}`. The first factors are
/// multiplied out in the log domain; the remaining log-tail
/// `Σ_{j>J} −ln(1 − (2j)^{−gap}) = Σ_r r^{−1} 2^{−gap·r} Σ_{j>J} j^{−gap·r}`
/// is summed with Euler–Maclaurin tails of the zeta series.
pub fn vage_constant(gap: i64) -> Result<f64> {
    if gap < 2 {
        return Err(WnsError::DivergentSeries { gap });
    }
    let g = gap as f64;
    let mut log_sq = 0.0;
    for j in 1..=VAGE_EXPLICIT_FACTORS {
        let q = (2.0 * f64::from(j)).powf(-g);
        log_sq -= (-q).ln_1p();
    }
    let a = f64::from(VAGE_EXPLICIT_FACTORS + 1);
    let mut r = 1.0;
    loop {
        let term = 2f64.powf(-g * r) * hurwitz_tail(g * r, a) / r;
        log_sq += term;
        if term < 1e-20 * log_sq.max(1e-300) || r > 200.0 {
            break;
        }
        r += 1.0;
    }
    Ok((0.5 * log_sq).exp())
}

/// Both sides of `‖h ∘ f‖_k ≤ A(k−ℓ) ‖h‖_ℓ ‖f‖_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VageReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

pub fn vage_check(
    h: &KondratievElement,
    f: &KondratievElement,
    spec: &TruncationSpec,
) -> Result<VageReport> {
    spec.validate()?;
    let a = vage_constant(i64::from(spec.k - spec.ell))?;
    for alpha in h.terms.keys().chain(f.terms.keys()) {
        weight(alpha, spec.k)?;
    }
    let lhs = h.wick(f).hk_norm(spec.k);
    let rhs = a * h.hk_norm(spec.ell) * f.hk_norm(spec.k);
    Ok(VageReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight(&MultiIndex::from_dense(&[1, 2]), 1).unwrap(), 32.0);
        assert_eq!(weight(&MultiIndex::vacuum(), 7).unwrap(), 1.0);
        let w = weight(&MultiIndex::from_dense(&[0, 0, 1]), 2).unwrap();
        assert!((w - 36.0).abs() < 1e-12);
    }

    #[test]
    fn weight_overflow_reports_log() {
        let alpha = MultiIndex::from_dense(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 400]);
        match weight(&alpha, 3) {
            Err(WnsError::WeightOverflow { log_value }) => {
                assert!((log_value - 1200.0 * 20f64.ln()).abs() < 1e-9)
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn graded_lex_order() {
        let mut v = vec![
            MultiIndex::from_dense(&[0, 2]),
            MultiIndex::from_dense(&[1]),
            MultiIndex::vacuum(),
            MultiIndex::from_dense(&[1, 1]),
            MultiIndex::from_dense(&[0, 1]),
            MultiIndex::from_dense(&[2]),
        ];
        v.sort();
        let dense: Vec<_> = v.iter().map(MultiIndex::to_dense).collect();
        assert_eq!(
            dense,
            vec![vec![], vec![1], vec![0, 1], vec![2], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn sub_and_add_are_inverse() {
        let a = MultiIndex::from_dense(&[2, 0, 1]);
        let b = MultiIndex::from_dense(&[1, 0, 1]);
        assert_eq!(a.checked_sub(&b).unwrap(), MultiIndex::from_dense(&[1]));
        assert_eq!(b.checked_sub(&a), None);
        assert_eq!(a.checked_sub(&MultiIndex::unit(2)), None);
        assert_eq!(a.checked_sub(&b).unwrap().add(&b), a);
    }

    #[test]
    fn from_sparse_rejects_bad_positions() {
        assert!(MultiIndex::from_sparse([(2, 1), (1, 1)]).is_err());
        assert!(MultiIndex::from_sparse([(0, 1)]).is_err());
        let a = MultiIndex::from_sparse([(1, 0), (3, 2)]).unwrap();
        assert_eq!(a.to_dense(), vec![0, 0, 2]);
    }

    #[test]
    fn wick_examples() {
        let e1 = KondratievElement::monomial(MultiIndex::unit(1), 1.0);
        let e2 = KondratievElement::monomial(MultiIndex::unit(2), 1.0);
        assert_eq!(
            e1.wick(&e2),
            KondratievElement::monomial(MultiIndex::from_dense(&[1, 1]), 1.0)
        );

        let f = KondratievElement::from_terms([
            (MultiIndex::vacuum(), c(0.5)),
            (MultiIndex::from_dense(&[0, 3]), Complex64::new(1.0, -2.0)),
        ]);
        assert_eq!(scalar_embed(2.0).wick(&f), f.scale(c(2.0)));

        let one_plus = KondratievElement::scalar(1.0).add(&e1);
        let sq = one_plus.wick(&one_plus);
        let expected = KondratievElement::from_terms([
            (MultiIndex::vacuum(), c(1.0)),
            (MultiIndex::unit(1), c(2.0)),
            (MultiIndex::from_dense(&[2]), c(1.0)),
        ]);
        assert_eq!(sq, expected);
    }

    #[test]
    fn norm_examples() {
        let e1 = KondratievElement::monomial(MultiIndex::unit(1), 1.0);
        assert!((e1.hk_norm(1) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(KondratievElement::zero().hk_norm(3), 0.0);
        let f = KondratievElement::scalar(3.0).add(&e1.scale(c(4.0)));
        assert!((f.hk_norm(2) - 13f64.sqrt()).abs() < 1e-14);
        // negative k enlarges the weights
        assert!((e1.hk_norm(-1) - 2f64.sqrt()).abs() < 1e-15);

        let h3 = KondratievElement::monomial(MultiIndex::from_dense(&[3]), 1.0);
        assert!((h3.l2w_norm().unwrap() - 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(KondratievElement::scalar(1.0).l2w_norm().unwrap(), 1.0);
        let h12 = KondratievElement::monomial(MultiIndex::from_dense(&[1, 2]), 1.0);
        assert!((h12.l2w_norm().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn l2w_factorial_overflow() {
        let big = KondratievElement::monomial(MultiIndex::from_dense(&[200]), 1.0);
        assert!(matches!(big.l2w_norm(), Err(WnsError::WeightOverflow { .. })));
    }

    #[test]
    fn pruning_keeps_support_finite() {
        let e1 = KondratievElement::monomial(MultiIndex::unit(1), 1.0);
        assert!(e1.sub(&e1).is_zero());
        assert!(KondratievElement::scalar(1e-310).is_zero());
    }

    #[test]
    fn vage_constant_gap_two_is_sqrt_half_pi() {
        let a = vage_constant(2).unwrap();
        assert!((a - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn vage_constant_rejects_small_gap() {
        assert!(matches!(vage_constant(1), Err(WnsError::DivergentSeries { gap: 1 })));
        assert!(vage_constant(0).is_err());
    }

    #[test]
    fn vage_constant_large_gap_dominant_term() {
        let a = vage_constant(12).unwrap();
        let dominant = (1.0 - 2f64.powi(-12)).powf(-0.5);
        assert!((a - dominant).abs() < 1e-6);
        assert!(a > dominant);
    }

    #[test]
    fn vage_check_trivial_cases() {
        let spec = TruncationSpec::with_defaults(3, 2);
        let zero = KondratievElement::zero();
        let r = vage_check(&zero, &zero, &spec).unwrap();
        assert_eq!((r.lhs, r.rhs, r.satisfied), (0.0, 0.0, true));

        let f = KondratievElement::from_terms([
            (MultiIndex::unit(2), c(1.5)),
            (MultiIndex::from_dense(&[1, 0, 1]), Complex64::new(0.0, 2.0)),
        ]);
        let r = vage_check(&KondratievElement::scalar(1.0), &f, &spec).unwrap();
        assert!((r.lhs - f.hk_norm(3)).abs() < 1e-15);
        assert!((r.rhs - vage_constant(2).unwrap() * f.hk_norm(3)).abs() < 1e-15);
        assert!(r.satisfied);
    }

    #[test]
    fn truncation_validation() {
        assert!(TruncationSpec::new(2, 2, 2, 1).is_err());
        assert!(TruncationSpec::new(0, 2, 3, 1).is_err());
        let spec = TruncationSpec::new(2, 2, 3, 1).unwrap();
        assert_eq!(spec.basis_size(), 6);
        assert_eq!(TruncationSpec::with_defaults(3, 2).basis_size(), 10);
    }

    #[test]
    fn element_json_shape() {
        let f = KondratievElement::from_terms([
            (MultiIndex::vacuum(), c(1.0)),
            (MultiIndex::from_dense(&[0, 2]), Complex64::new(0.25, -1.0)),
        ]);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(
            s,
            r#"{"terms":[{"alpha":[],"re":1.0,"im":0.0},{"alpha":[0,2],"re":0.25,"im":-1.0}]}"#
        );
        let back: KondratievElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}

//! Small dense complex helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() || m.iter().all(|z| *z == Complex64::default()) {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// `(m + m*) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    hermitian_part(m).symmetric_eigenvalues().min()
}

/// Lower-triangular `L` with positive diagonal and `L* L = a`.
///
/// Obtained from the ordinary Cholesky factor of the index-reversed matrix.
pub fn lower_cholesky_star(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let rev = CMat::from_fn(n, n, |i, j| a[(n - 1 - i, n - 1 - j)]);
    let chol = rev.cholesky()?;
    let l = chol.l();
    // J L* J is lower triangular and (J L* J)* (J L* J) = J L L* J = a.
    let lt = l.adjoint();
    Some(CMat::from_fn(n, n, |i, j| lt[(n - 1 - i, n - 1 - j)]))
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Largest modulus among entries of `m − c·I`.
pub fn max_dev_from_scalar_identity(m: &CMat, c: Complex64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { c } else { Complex64::default() };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    worst
}

//! Bridge to `faer` for dense decompositions.
//!
//! All decompositions run sequentially so that results are bit-identical
//! regardless of the worker count.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use faer::{Mat, MatRef, Par, Side};
use num_complex::Complex64 as c64;
use std::sync::Once;

static SEQUENTIAL: Once = Once::new();

pub(crate) fn ensure_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

fn to_faer(m: &CMat) -> Mat<c64> {
    Mat::from_fn(m.n(), m.n(), |i, j| m[(i, j)])
}

pub(crate) fn singular_values_small(m: &CMat) -> Vec<f64> {
    ensure_sequential();
    to_faer(m).singular_values().unwrap_or_else(|_| vec![f64::NAN; m.n()])
}

pub(crate) fn hermitian_eigen_small(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    ensure_sequential();
    let n = m.n();
    let evd = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigen: {e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().map(|v| v.re).collect();
    let u = evd.U();
    Ok((vals, CMat::from_fn(n, |i, j| u[(i, j)])))
}

pub(crate) fn eigenvalues_small(m: &CMat) -> Result<Vec<c64>> {
    ensure_sequential();
    to_faer(m).eigenvalues().map_err(|e| Error::Numerical(format!("eigenvalues: {e:?}")))
}

/// Largest absolute entry.
pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn is_hermitian(a: MatRef<'_, c64>, rel_tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let tol = rel_tol * max_abs(a).max(f64::MIN_POSITIVE);
    for j in 0..a.ncols() {
        for i in j..a.nrows() {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

fn is_skew_hermitian(a: MatRef<'_, c64>, rel_tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let tol = rel_tol * max_abs(a).max(f64::MIN_POSITIVE);
    for j in 0..a.ncols() {
        for i in j..a.nrows() {
            if (a[(i, j)] + a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

fn is_real(a: MatRef<'_, c64>, rel_tol: f64) -> bool {
    let tol = rel_tol * max_abs(a).max(f64::MIN_POSITIVE);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)].im.abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    ensure_sequential();
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    if is_real(a, 1e-14) {
        let r = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re);
        return r
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numerical(format!("symmetric eigenvalues: {e:?}")));
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigenvalues: {e:?}")))
}

/// Eigen-decomposition (ascending eigenvalues, eigenvectors as columns) of a
/// Hermitian matrix.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    ensure_sequential();
    if is_real(a, 1e-14) {
        let r = Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re);
        let evd = r
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("symmetric eigen: {e:?}")))?;
        let vals = evd.S().column_vector().iter().copied().collect();
        let u = evd.U();
        return Ok((vals, Mat::from_fn(u.nrows(), u.ncols(), |i, j| c64::new(u[(i, j)], 0.0))));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigen: {e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Singular values in descending order, `min(rows, cols)` of them.
///
/// Exact reductions are applied first: identically zero rows and columns are
/// removed, Hermitian and skew-Hermitian blocks go through the symmetric
/// eigensolver, and real blocks through the real SVD.
pub fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    ensure_sequential();
    let (nr, nc) = (a.nrows(), a.ncols());
    let total = nr.min(nc);
    let rows: Vec<usize> = (0..nr).filter(|&i| (0..nc).any(|j| a[(i, j)] != c64::new(0.0, 0.0))).collect();
    let cols: Vec<usize> = (0..nc).filter(|&j| rows.iter().any(|&i| a[(i, j)] != c64::new(0.0, 0.0))).collect();
    let mut out = if rows.is_empty() || cols.is_empty() {
        Vec::new()
    } else if nr == nc && 4 * rows.len().min(cols.len()) >= 3 * rows.len().max(cols.len()) {
        // a square principal submatrix keeps the Hermitian structure visible
        let mut idx = rows.clone();
        idx.extend(cols.iter().copied());
        idx.sort_unstable();
        idx.dedup();
        let sub = Mat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])]);
        reduced_singular_values(sub.as_ref())?
    } else {
        let sub = Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
        general_singular_values(sub.as_ref())?
    };
    out.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    out.truncate(total);
    out.resize(total, 0.0);
    Ok(out)
}

fn reduced_singular_values(sub: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if is_hermitian(sub, 1e-12) {
        return Ok(hermitian_eigenvalues(sub)?.into_iter().map(f64::abs).collect());
    }
    if is_skew_hermitian(sub, 1e-12) {
        let h = Mat::from_fn(sub.nrows(), sub.ncols(), |i, j| sub[(i, j)] * c64::new(0.0, 1.0));
        return Ok(hermitian_eigenvalues(h.as_ref())?.into_iter().map(f64::abs).collect());
    }
    general_singular_values(sub)
}

fn general_singular_values(sub: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let (r, c) = (sub.nrows(), sub.ncols());
    if 4 * r.min(c) < 3 * r.max(c) {
        // thin QR of the tall orientation leaves a small square triangle
        let tall = if r >= c { sub.to_owned() } else { sub.adjoint().to_owned() };
        let rr = tall.qr().thin_R().to_owned();
        return general_singular_values(rr.as_ref());
    }
    if is_real(sub, 1e-14) {
        let r = Mat::<f64>::from_fn(sub.nrows(), sub.ncols(), |i, j| sub[(i, j)].re);
        return r.singular_values().map_err(|e| Error::Numerical(format!("real svd: {e:?}")));
    }
    sub.singular_values().map_err(|e| Error::Numerical(format!("complex svd: {e:?}")))
}

/// Least-squares solve of a small real system; returns the solution and the
/// 2-norm condition number of the design matrix.
pub fn lstsq_real(design: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    ensure_sequential();
    use faer::linalg::solvers::SolveLstsq;
    let m = design.len();
    let n = design.first().map_or(0, |r| r.len());
    if m < n || n == 0 {
        return Err(Error::Fit(format!("least squares needs rows >= cols > 0, got {m}x{n}")));
    }
    let a = Mat::<f64>::from_fn(m, n, |i, j| design[i][j]);
    let sv = a.singular_values().map_err(|e| Error::Fit(format!("svd: {e:?}")))?;
    let cond = if sv[n - 1] > 0.0 { sv[0] / sv[n - 1] } else { f64::INFINITY };
    let mut b = Mat::<f64>::from_fn(m, 1, |i, _| rhs[i]);
    a.qr().solve_lstsq_in_place(b.as_mut());
    Ok(((0..n).map(|i| b[(i, 0)]).collect(), cond))
}

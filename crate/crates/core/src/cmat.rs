//! Small dense complex square matrices used at the symbol level.

use crate::error::{Error, Result};
use crate::linalg;
use num_complex::Complex64 as c64;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<c64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![c64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, c64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, c: c64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = c;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> c64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_diag(diag: &[c64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<c64> = diag.iter().map(|&v| c64::new(v, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Row-major construction; panics if `rows` is not square.
    pub fn from_rows(rows: &[&[c64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "CMat::from_rows needs a square layout");
        Self { n, data: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "CMat::from_real_rows needs a square layout");
        Self { n, data: rows.iter().flat_map(|r| r.iter().map(|&v| c64::new(v, 0.0))).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[c64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [c64] {
        &mut self.data
    }

    pub fn scale(&self, c: c64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| v * c).collect() }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: c64, other: &CMat) {
        debug_assert_eq!(self.n, other.n);
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    /// `self += a * b` (matrix product accumulate)
    pub fn add_product(&mut self, a: &CMat, b: &CMat) {
        let n = self.n;
        debug_assert!(a.n == n && b.n == n);
        if n == 1 {
            self.data[0] += a.data[0] * b.data[0];
            return;
        }
        for i in 0..n {
            for k in 0..n {
                let aik = a.data[i * n + k];
                if aik == c64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &b.data[k * n..(k + 1) * n];
                let crow = &mut self.data[i * n..(i + 1) * n];
                for (c, &bv) in crow.iter_mut().zip(brow) {
                    *c += aik * bv;
                }
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.data[j * n + i])
    }

    pub fn trace(&self) -> c64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> f64 {
        if self.n == 1 {
            return self.data[0].norm();
        }
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.data[0].norm()];
        }
        linalg::singular_values_small(self)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.n;
        let scale = self.norm_max().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..=i {
                if (self.data[i * n + j] - self.data[j * n + i].conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        if n == 1 {
            let v = self.data[0];
            if v.norm() == 0.0 || !v.norm().is_finite() {
                return Err(Error::Numerical("singular 1x1 matrix".into()));
            }
            return Ok(Self { n, data: vec![v.inv()] });
        }
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.norm_max();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].norm();
            for r in col + 1..n {
                let v = a[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best <= 1e-300 || best <= scale * 1e-15 {
                return Err(Error::Numerical("singular matrix in inverse".into()));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                    inv.swap(col * n + j, piv * n + j);
                }
            }
            let p = a[col * n + col].inv();
            for j in 0..n {
                a[col * n + j] *= p;
                inv[col * n + j] *= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == c64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let ac = a[col * n + j];
                    let ic = inv[col * n + j];
                    a[r * n + j] -= f * ac;
                    inv[r * n + j] -= f * ic;
                }
            }
        }
        Ok(Self { n, data: inv })
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
    /// eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, CMat)> {
        if self.n == 1 {
            return Ok((vec![self.data[0].re], CMat::identity(1)));
        }
        linalg::hermitian_eigen_small(self)
    }

    /// Eigenvalues of a general matrix.
    pub fn eigenvalues(&self) -> Result<Vec<c64>> {
        if self.n == 1 {
            return Ok(vec![self.data[0]]);
        }
        linalg::eigenvalues_small(self)
    }

    /// Applies a scalar function to a Hermitian matrix through its spectrum.
    pub fn hermitian_fn(&self, f: impl Fn(f64) -> c64) -> Result<CMat> {
        let (vals, vecs) = self.hermitian_eigen()?;
        let n = self.n;
        let fv: Vec<c64> = vals.iter().map(|&v| f(v)).collect();
        Ok(CMat::from_fn(n, |i, j| {
            (0..n).map(|k| vecs[(i, k)] * fv[k] * vecs[(j, k)].conj()).sum()
        }))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = c64;
    fn index(&self, (i, j): (usize, usize)) -> &c64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut c64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add<&CMat> for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub<&CMat> for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul<&CMat> for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n);
        out.add_product(self, rhs);
        out
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat { n: self.n, data: self.data.iter().map(|v| -v).collect() }
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, rhs: &CMat) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    #[test]
    fn inverse_roundtrip() {
        let a = CMat::from_rows(&[
            &[c(2.0, 1.0), c(0.5, 0.0), c(0.0, -1.0)],
            &[c(0.0, 0.3), c(3.0, 0.0), c(1.0, 1.0)],
            &[c(1.0, 0.0), c(0.0, 0.0), c(4.0, -2.0)],
        ]);
        let inv = a.inverse().unwrap();
        let prod = &a * &inv;
        assert!((&prod - &CMat::identity(3)).norm_max() < 1e-14);
    }

    #[test]
    fn singular_inverse_is_error() {
        let a = CMat::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(a.inverse().is_err());
    }

    #[test]
    fn trace_is_cyclic() {
        let a = CMat::from_fn(3, |i, j| c((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let b = CMat::from_fn(3, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), j as f64));
        let ab = (&a * &b).trace();
        let ba = (&b * &a).trace();
        assert!((ab - ba).norm() < 1e-12);
        assert!((&a.adjoint() * &a).trace().re >= 0.0);
    }

    #[test]
    fn hermitian_fn_square_root() {
        let p = CMat::from_real_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let s = p.hermitian_fn(|v| c(v.sqrt(), 0.0)).unwrap();
        assert!((&(&s * &s) - &p).norm_max() < 1e-13);
    }
}

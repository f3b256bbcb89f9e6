//! Truncated multivariate Taylor series with matrix coefficients.
//!
//! A jet of order `J` in `nv` variables stores `c_γ = ∂^γ f(p) / γ!` for all
//! multi-indices with `|γ| ≤ J`. Monomials are laid out in graded order, so a
//! jet of lower order is a prefix of a higher one.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use num_complex::Complex64 as c64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub type MultiIndex = Vec<u8>;

#[derive(Debug)]
pub struct MonoTable {
    nv: usize,
    order: usize,
    monos: Vec<MultiIndex>,
    degree_start: Vec<usize>,
    index: HashMap<MultiIndex, usize>,
    /// (i, j, k) with mono_i + mono_j = mono_k, grouped by k
    pairs: Vec<(u32, u32, u32)>,
}

impl MonoTable {
    fn build(nv: usize, order: usize) -> Self {
        let mut monos: Vec<MultiIndex> = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for deg in 0..=order {
            degree_start.push(monos.len());
            let mut cur = vec![0u8; nv];
            push_degree(&mut monos, &mut cur, 0, deg);
        }
        degree_start.push(monos.len());
        let index: HashMap<MultiIndex, usize> =
            monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut pairs = Vec::new();
        for (k, mk) in monos.iter().enumerate() {
            // enumerate all splittings mk = a + b
            let mut a = vec![0u8; nv];
            split(mk, &mut a, 0, &mut |a: &[u8]| {
                let b: MultiIndex = mk.iter().zip(a).map(|(x, y)| x - y).collect();
                let ia = index[a];
                let ib = index[&b];
                pairs.push((ia as u32, ib as u32, k as u32));
            });
        }
        Self { nv, order, monos, degree_start, index, pairs }
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of monomials of total degree ≤ `order`.
    pub fn len_for(&self, order: usize) -> usize {
        self.degree_start[order.min(self.order) + 1]
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monos
    }

    pub fn index_of(&self, m: &[u8]) -> Option<usize> {
        self.index.get(m).copied()
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, cur: &mut [u8], pos: usize, remaining: usize) {
    let nv = cur.len();
    if nv == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == nv - 1 {
        cur[pos] = remaining as u8;
        out.push(cur.to_vec());
        cur[pos] = 0;
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v as u8;
        push_degree(out, cur, pos + 1, remaining - v);
    }
    cur[pos] = 0;
}

fn split(m: &[u8], a: &mut [u8], pos: usize, f: &mut dyn FnMut(&[u8])) {
    if pos == m.len() {
        f(a);
        return;
    }
    for v in 0..=m[pos] {
        a[pos] = v;
        split(m, a, pos + 1, f);
    }
    a[pos] = 0;
}

type TableCache = Mutex<HashMap<(usize, usize), Arc<MonoTable>>>;

fn cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared monomial table for `nv` variables up to `order`.
pub fn table(nv: usize, order: usize) -> Arc<MonoTable> {
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    guard.entry((nv, order)).or_insert_with(|| Arc::new(MonoTable::build(nv, order))).clone()
}

/// Matrix-valued truncated Taylor series.
#[derive(Clone, Debug)]
pub struct MatJet {
    nv: usize,
    order: usize,
    n: usize,
    /// coefficient blocks, monomial-major, each an `n × n` row-major block
    coef: Vec<c64>,
}

impl MatJet {
    pub fn zeros(nv: usize, order: usize, n: usize) -> Self {
        let len = table(nv, order).len_for(order);
        Self { nv, order, n, coef: vec![c64::new(0.0, 0.0); len * n * n] }
    }

    pub fn constant(nv: usize, order: usize, value: &CMat) -> Self {
        let mut j = Self::zeros(nv, order, value.n());
        j.coef[..value.n() * value.n()].copy_from_slice(value.as_slice());
        j
    }

    pub fn scalar_constant(nv: usize, order: usize, n: usize, c: c64) -> Self {
        Self::constant(nv, order, &CMat::scalar(n, c))
    }

    /// Scalar (1×1) jet of the coordinate `var` at the point `value`.
    pub fn variable(nv: usize, order: usize, var: usize, value: f64) -> Self {
        let mut j = Self::zeros(nv, order, 1);
        j.coef[0] = c64::new(value, 0.0);
        if order >= 1 {
            let mut m = vec![0u8; nv];
            m[var] = 1;
            let idx = table(nv, order).index_of(&m).expect("variable monomial");
            j.coef[idx] = c64::new(1.0, 0.0);
        }
        j
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn nmono(&self) -> usize {
        self.coef.len() / (self.n * self.n)
    }

    pub fn value(&self) -> CMat {
        self.coef_block(0)
    }

    pub fn coef_block(&self, idx: usize) -> CMat {
        let nn = self.n * self.n;
        let mut m = CMat::zeros(self.n);
        m.as_mut_slice().copy_from_slice(&self.coef[idx * nn..(idx + 1) * nn]);
        m
    }

    /// Taylor coefficient `∂^γ f / γ!` for the multi-index `γ`.
    pub fn coefficient(&self, gamma: &[u8]) -> Result<CMat> {
        let deg: usize = gamma.iter().map(|&g| g as usize).sum();
        if gamma.len() != self.nv {
            return Err(Error::Dimension(format!("multi-index of length {} for {} variables", gamma.len(), self.nv)));
        }
        if deg > self.order {
            return Err(Error::JetOrder { required: deg, available: self.order });
        }
        let idx = table(self.nv, self.order).index_of(gamma).expect("monomial present");
        Ok(self.coef_block(idx))
    }

    /// Partial derivative `∂^γ f` at the expansion point.
    pub fn derivative(&self, gamma: &[u8]) -> Result<CMat> {
        let fact: f64 = gamma.iter().map(|&g| factorial(g as usize)).product();
        Ok(self.coefficient(gamma)?.scale_real(fact))
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order {
            return self.clone();
        }
        let len = table(self.nv, self.order).len_for(order);
        let nn = self.n * self.n;
        Self { nv: self.nv, order, n: self.n, coef: self.coef[..len * nn].to_vec() }
    }

    fn check_compat(&self, other: &Self) {
        assert_eq!(self.nv, other.nv, "jet variable count mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compat(other);
        let order = self.order.min(other.order);
        let (a, b) = (self.truncate(order), other.truncate(order));
        let (a, b) = broadcast(a, b);
        let coef = a.coef.iter().zip(&b.coef).map(|(x, y)| x + y).collect();
        Self { nv: a.nv, order, n: a.n, coef }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: c64) -> Self {
        Self { nv: self.nv, order: self.order, n: self.n, coef: self.coef.iter().map(|v| v * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(c64::new(c, 0.0))
    }

    /// `self += c * other`, truncating to the lower order.
    pub fn axpy(&mut self, c: c64, other: &Self) {
        self.check_compat(other);
        if other.order < self.order {
            *self = self.truncate(other.order);
        }
        let len = self.coef.len();
        if self.n == other.n {
            for (a, &b) in self.coef.iter_mut().zip(other.coef[..len].iter()) {
                *a += c * b;
            }
        } else {
            let r = self.add(&other.scale(c));
            *self = r;
        }
    }

    pub fn add_constant(&self, value: &CMat) -> Self {
        let mut r = self.clone();
        let nn = r.n * r.n;
        if value.n() == r.n {
            for (a, b) in r.coef[..nn].iter_mut().zip(value.as_slice()) {
                *a += b;
            }
            r
        } else {
            r.add(&Self::constant(self.nv, self.order, value))
        }
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul_const(&self, m: &CMat) -> Self {
        let nn = self.n * self.n;
        if self.n == 1 && m.n() != 1 {
            return Self::constant(self.nv, self.order, m).mul(self);
        }
        let mut out = Self::zeros(self.nv, self.order, self.n);
        for k in 0..self.nmono() {
            let block = CMat::from_fn(self.n, |i, j| self.coef[k * nn + i * self.n + j]);
            let p = m * &block;
            out.coef[k * nn..(k + 1) * nn].copy_from_slice(p.as_slice());
        }
        out
    }

    /// Cauchy product; 1×1 jets broadcast as scalars against matrix jets.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_compat(other);
        let order = self.order.min(other.order);
        let tab = table(self.nv, self.order.max(other.order));
        let len = tab.len_for(order);
        let n = self.n.max(other.n);
        let nn = n * n;
        let mut coef = vec![c64::new(0.0, 0.0); len * nn];
        let (an, bn) = (self.n, other.n);
        for &(i, j, k) in &tab.pairs {
            let (i, j, k) = (i as usize, j as usize, k as usize);
            if k >= len {
                break;
            }
            let out = &mut coef[k * nn..(k + 1) * nn];
            if an == 1 && bn == 1 {
                out[0] += self.coef[i] * other.coef[j];
            } else if an == 1 {
                let s = self.coef[i];
                if s == c64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out.iter_mut().zip(&other.coef[j * nn..(j + 1) * nn]) {
                    *o += s * b;
                }
            } else if bn == 1 {
                let s = other.coef[j];
                if s == c64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &a) in out.iter_mut().zip(&self.coef[i * nn..(i + 1) * nn]) {
                    *o += a * s;
                }
            } else {
                let a = &self.coef[i * nn..(i + 1) * nn];
                let b = &other.coef[j * nn..(j + 1) * nn];
                for r in 0..n {
                    for t in 0..n {
                        let av = a[r * n + t];
                        if av == c64::new(0.0, 0.0) {
                            continue;
                        }
                        for c in 0..n {
                            out[r * n + c] += av * b[t * n + c];
                        }
                    }
                }
            }
        }
        Self { nv: self.nv, order, n, coef }
    }

    /// Entrywise complex conjugate transpose of every coefficient.
    pub fn adjoint(&self) -> Self {
        let nn = self.n * self.n;
        let mut out = self.clone();
        for k in 0..self.nmono() {
            for i in 0..self.n {
                for j in 0..self.n {
                    out.coef[k * nn + i * self.n + j] = self.coef[k * nn + j * self.n + i].conj();
                }
            }
        }
        out
    }

    /// Jet of `∂^α f` at order `self.order - |α|`.
    pub fn shift(&self, alpha: &[u8]) -> Result<Self> {
        let deg: usize = alpha.iter().map(|&a| a as usize).sum();
        if deg > self.order {
            return Err(Error::JetOrder { required: deg, available: self.order });
        }
        let new_order = self.order - deg;
        let tab = table(self.nv, self.order);
        let len = tab.len_for(new_order);
        let nn = self.n * self.n;
        let mut coef = vec![c64::new(0.0, 0.0); len * nn];
        let mut shifted = vec![0u8; self.nv];
        for (k, g) in tab.monos[..len].iter().enumerate() {
            let mut f = 1.0;
            for v in 0..self.nv {
                shifted[v] = g[v] + alpha[v];
                for t in 1..=alpha[v] as usize {
                    f *= (g[v] as usize + t) as f64;
                }
            }
            let src = tab.index_of(&shifted).expect("shifted monomial");
            for e in 0..nn {
                coef[k * nn + e] = self.coef[src * nn + e] * f;
            }
        }
        Ok(Self { nv: self.nv, order: new_order, n: self.n, coef })
    }

    /// Composition `g ∘ f` for a scalar jet, given `g^{(k)}(f(p))` for
    /// `k = 0..=order`.
    pub fn compose_scalar(&self, derivs: &[c64]) -> Self {
        assert_eq!(self.n, 1, "compose_scalar needs a 1x1 jet");
        let mut nil = self.clone();
        nil.coef[0] = c64::new(0.0, 0.0);
        let mut out = Self::scalar_constant(self.nv, self.order, 1, derivs[0]);
        let mut power = Self::scalar_constant(self.nv, self.order, 1, c64::new(1.0, 0.0));
        let mut fact = 1.0;
        for k in 1..=self.order {
            power = power.mul(&nil);
            fact *= k as f64;
            out.axpy(derivs[k] / fact, &power);
        }
        out
    }

    /// `f^p` for a scalar jet with nonzero value (principal branch).
    pub fn powc(&self, p: c64) -> Self {
        let f0 = self.coef[0];
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut coeff = c64::new(1.0, 0.0);
        for k in 0..=self.order {
            derivs.push(coeff * f0.powc(p - k as f64));
            coeff *= p - k as f64;
        }
        self.compose_scalar(&derivs)
    }

    pub fn powf(&self, p: f64) -> Self {
        self.powc(c64::new(p, 0.0))
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn exp(&self) -> Self {
        let e = self.coef[0].exp();
        self.compose_scalar(&vec![e; self.order + 1])
    }

    pub fn ln(&self) -> Self {
        let f0 = self.coef[0];
        let mut derivs = vec![f0.ln()];
        let mut c = 1.0;
        for k in 1..=self.order {
            derivs.push(c * f0.powi(-(k as i32)));
            c *= -(k as f64);
        }
        self.compose_scalar(&derivs)
    }

    pub fn sin(&self) -> Self {
        let f0 = self.coef[0];
        let cyc = [f0.sin(), f0.cos(), -f0.sin(), -f0.cos()];
        self.compose_scalar(&(0..=self.order).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Self {
        let f0 = self.coef[0];
        let cyc = [f0.cos(), -f0.sin(), -f0.cos(), f0.sin()];
        self.compose_scalar(&(0..=self.order).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    /// Matrix inverse through the Neumann series of the nilpotent part.
    pub fn inverse(&self) -> Result<Self> {
        let v0 = self.value();
        let inv0 = v0.inverse()?;
        if self.order == 0 {
            return Ok(Self::constant(self.nv, 0, &inv0));
        }
        let mut nil = self.clone();
        let nn = self.n * self.n;
        for c in nil.coef[..nn].iter_mut() {
            *c = c64::new(0.0, 0.0);
        }
        // F^{-1} = Σ_k (-F0^{-1} N)^k F0^{-1}
        let step = nil.left_mul_const(&inv0.scale_real(-1.0));
        let inv0_jet = Self::constant(self.nv, self.order, &inv0);
        let mut term = inv0_jet.clone();
        let mut out = inv0_jet;
        for _ in 0..self.order {
            term = step.mul(&term);
            out.axpy(c64::new(1.0, 0.0), &term);
        }
        Ok(out)
    }

    /// Embeds a scalar jet as `c · I_n`.
    pub fn to_matrix(&self, n: usize) -> Self {
        if self.n == n {
            return self.clone();
        }
        assert_eq!(self.n, 1, "only scalar jets broadcast");
        let mut out = Self::zeros(self.nv, self.order, n);
        let nn = n * n;
        for k in 0..self.nmono() {
            for i in 0..n {
                out.coef[k * nn + i * n + i] = self.coef[k];
            }
        }
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coef.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coef.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Builds a jet from raw coefficients (graded monomial order).
    pub fn from_coefficients(nv: usize, order: usize, n: usize, blocks: Vec<CMat>) -> Result<Self> {
        let len = table(nv, order).len_for(order);
        if blocks.len() != len || blocks.iter().any(|b| b.n() != n) {
            return Err(Error::Dimension(format!("expected {len} blocks of size {n}")));
        }
        let coef = blocks.iter().flat_map(|b| b.as_slice().iter().copied()).collect();
        Ok(Self { nv, order, n, coef })
    }
}

fn broadcast(a: MatJet, b: MatJet) -> (MatJet, MatJet) {
    if a.n == b.n {
        (a, b)
    } else if a.n == 1 {
        let n = b.n;
        (a.to_matrix(n), b)
    } else {
        let n = a.n;
        (a, b.to_matrix(n))
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Multi-index factorial `α!`.
pub fn multi_factorial(alpha: &[u8]) -> f64 {
    alpha.iter().map(|&a| factorial(a as usize)).product()
}

/// All multi-indices in `nv` variables with total degree exactly `deg`.
pub fn multi_indices_of_degree(nv: usize, deg: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; nv];
    push_degree(&mut out, &mut cur, 0, deg);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: c64, b: f64, tol: f64) -> bool {
        (a - c64::new(b, 0.0)).norm() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn table_counts() {
        let t = table(4, 3);
        assert_eq!(t.len_for(3), 35);
        assert_eq!(t.len_for(1), 5);
        assert_eq!(table(0, 5).len_for(5), 1);
    }

    #[test]
    fn product_of_variables() {
        // f = x*y at (2, 3): ∂x∂y f = 1, ∂x f = 3
        let x = MatJet::variable(2, 3, 0, 2.0);
        let y = MatJet::variable(2, 3, 1, 3.0);
        let f = x.mul(&y);
        assert!(close(f.value()[(0, 0)], 6.0, 1e-15));
        assert!(close(f.derivative(&[1, 0]).unwrap()[(0, 0)], 3.0, 1e-15));
        assert!(close(f.derivative(&[1, 1]).unwrap()[(0, 0)], 1.0, 1e-15));
        assert!(close(f.derivative(&[2, 0]).unwrap()[(0, 0)], 0.0, 1e-15));
    }

    #[test]
    fn exp_and_ln_derivatives() {
        let x = MatJet::variable(1, 5, 0, 0.7);
        let e = x.scale_real(2.0).exp();
        for k in 0..=5u8 {
            let d = e.derivative(&[k]).unwrap()[(0, 0)];
            assert!(close(d, 2f64.powi(k as i32) * (1.4f64).exp(), 1e-13));
        }
        let l = x.ln();
        // d^3/dx^3 ln x = 2/x^3
        assert!(close(l.derivative(&[3]).unwrap()[(0, 0)], 2.0 / 0.7f64.powi(3), 1e-12));
    }

    #[test]
    fn pow_matches_closed_form() {
        let x = MatJet::variable(1, 4, 0, 1.5);
        let p = x.powf(-0.5);
        // d^2/dx^2 x^{-1/2} = 3/4 x^{-5/2}
        assert!(close(p.derivative(&[2]).unwrap()[(0, 0)], 0.75 * 1.5f64.powf(-2.5), 1e-13));
    }

    #[test]
    fn shift_is_derivative() {
        let x = MatJet::variable(2, 4, 0, 0.3);
        let y = MatJet::variable(2, 4, 1, -0.4);
        let f = x.mul(&x).mul(&y).sin();
        let g = f.shift(&[1, 0]).unwrap();
        for gamma in [[0u8, 0], [1, 0], [0, 2], [1, 1]] {
            let lhs = g.derivative(&gamma).unwrap()[(0, 0)];
            let rhs = f.derivative(&[gamma[0] + 1, gamma[1]]).unwrap()[(0, 0)];
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn matrix_inverse_jet() {
        let x = MatJet::variable(1, 4, 0, 0.2);
        let a = CMat::from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]]);
        let b = CMat::from_real_rows(&[&[0.5, 0.0], &[1.0, -1.0]]);
        let f = MatJet::constant(1, 4, &a).add(&x.to_matrix(2).left_mul_const(&b));
        let inv = f.inverse().unwrap();
        let prod = f.mul(&inv);
        let id = MatJet::constant(1, 4, &CMat::identity(2));
        assert!(prod.sub(&id).max_abs() < 1e-13);
    }
}

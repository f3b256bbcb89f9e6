//! Torus discretizations of pseudo-differential operators.
//!
//! Grid points are `x_j = −L/2 + j·L/N` per axis and frequencies follow FFT
//! order, `ξ_k = 2πk/L` with `k ∈ {0, …, N/2−1, −N/2, …, −1}`. Vectors are
//! laid out point-major: entry `p·n + a` is component `a` at grid point `p`.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::fft::{FftNd, diff_index, negate_index};
use crate::linalg;
use crate::quadrature::BoxDomain;
use crate::spatial::SpatialFn;
use crate::symbols::{ClassicalSymbol, cutoff_psi};
use faer::Mat;
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

const ZERO: c64 = c64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub d: usize,
    /// torus side length
    pub l: f64,
    /// points per axis (power of two)
    pub npts: usize,
}

impl GridSpec {
    pub fn new(d: usize, l: f64, npts: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("grid dimension must be positive".into()));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Config(format!("torus side must be positive, got {l}")));
        }
        if npts < 2 || !npts.is_power_of_two() {
            return Err(Error::Config(format!("points per axis must be a power of two ≥ 2, got {npts}")));
        }
        Ok(Self { d, l, npts })
    }

    pub fn num_points(&self) -> usize {
        self.npts.pow(self.d as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.l / self.npts as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        self.l.powi(self.d as i32)
    }

    /// Frequency spacing `2π/L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// Largest resolved frequency `π N / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.npts as f64 / self.l
    }

    fn axis_indices(&self, p: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        let mut rem = p;
        for a in (0..self.d).rev() {
            out[a] = rem % self.npts;
            rem /= self.npts;
        }
        out
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        let h = self.spacing();
        self.axis_indices(p).iter().map(|&j| -0.5 * self.l + j as f64 * h).collect()
    }

    /// Signed integer frequency index of flat index `p`.
    pub fn wavenumber(&self, p: usize) -> Vec<i64> {
        let n = self.npts as i64;
        self.axis_indices(p).iter().map(|&i| if (i as i64) < n / 2 { i as i64 } else { i as i64 - n }).collect()
    }

    pub fn frequency(&self, p: usize) -> Vec<f64> {
        let s = self.dxi();
        self.wavenumber(p).iter().map(|&k| k as f64 * s).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.num_points()).map(|p| self.point(p)).collect()
    }

    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.num_points()).map(|p| self.frequency(p)).collect()
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::cube(self.d, 0.5 * self.l)
    }

    /// Support must lie in `[−L/4, L/4]^d` (margin `L/4` to the torus boundary).
    pub fn check_support(&self, support: &BoxDomain) -> Result<()> {
        let q = 0.25 * self.l;
        let ok = support.lo.iter().zip(&support.hi).all(|(a, b)| *a >= -q - 1e-12 && *b <= q + 1e-12);
        if support.dim() != self.d || !ok {
            return Err(Error::Geometry(format!(
                "support {:?}–{:?} does not fit in [−L/4, L/4]^{} for L = {}",
                support.lo, support.hi, self.d, self.l
            )));
        }
        Ok(())
    }
}

/// Storage of a discretized operator.
#[derive(Clone, Debug)]
pub enum Repr {
    Dense(Mat<c64>),
    /// blocks `m(ξ_k)` per frequency in FFT order
    FourierDiagonal(Vec<CMat>),
    /// blocks `f(x_p)` per grid point
    Multiplication(Vec<CMat>),
}

/// How multiplication operators are realized on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicationScheme {
    /// pointwise values on the grid
    #[default]
    Collocated,
    /// Galerkin product with exact Fourier coefficients (no wrap-around)
    Dealiased,
}

#[derive(Clone, Debug)]
pub struct DiscretizedOperator {
    grid: GridSpec,
    n: usize,
    repr: Repr,
    trace_weights: Vec<f64>,
    order_hint: f64,
    hermitian: bool,
}

fn block_mul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

impl DiscretizedOperator {
    fn with_repr(grid: &GridSpec, n: usize, repr: Repr, order_hint: f64) -> Self {
        let side = grid.num_points() * n;
        Self { grid: grid.clone(), n, repr, trace_weights: vec![1.0; side], order_hint, hermitian: false }
    }

    pub fn from_dense(grid: &GridSpec, n: usize, m: Mat<c64>) -> Result<Self> {
        let side = grid.num_points() * n;
        if m.nrows() != side || m.ncols() != side {
            return Err(Error::Dimension(format!("matrix is {}x{}, grid needs side {side}", m.nrows(), m.ncols())));
        }
        Ok(Self::with_repr(grid, n, Repr::Dense(m), 0.0))
    }

    pub fn identity(grid: &GridSpec, n: usize) -> Self {
        Self::with_repr(grid, n, Repr::Multiplication(vec![CMat::identity(n); grid.num_points()]), 0.0)
    }

    /// Multiplier `φ(ξ_k)` in the Fourier basis; `φ` is evaluated at every
    /// lattice frequency including `ξ = 0`.
    pub fn fourier_multiplier(grid: &GridSpec, n: usize, phi: impl Fn(&[f64]) -> CMat) -> Result<Self> {
        let blocks: Vec<CMat> = grid.frequencies().iter().map(|xi| phi(xi)).collect();
        if blocks.iter().any(|b| b.n() != n) {
            return Err(Error::Config(format!("multiplier blocks must be {n}x{n}")));
        }
        Ok(Self::with_repr(grid, n, Repr::FourierDiagonal(blocks), 0.0))
    }

    /// Bessel potential `(1+|ξ|²)^{−m/2}`.
    pub fn bessel_potential(grid: &GridSpec, m: f64) -> Self {
        let op = Self::fourier_multiplier(grid, 1, |xi| {
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            CMat::scalar(1, c64::new((1.0 + r2).powf(-m / 2.0), 0.0))
        })
        .expect("scalar blocks");
        op.with_order_hint(-m).assume_hermitian()
    }

    /// Homogeneous multiplier `|ξ|^α`, zero at `ξ = 0`.
    pub fn riesz_potential(grid: &GridSpec, alpha: f64) -> Self {
        let op = Self::fourier_multiplier(grid, 1, |xi| {
            let r: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            CMat::scalar(1, if r == 0.0 { ZERO } else { c64::new(r.powf(alpha), 0.0) })
        })
        .expect("scalar blocks");
        op.with_order_hint(alpha).assume_hermitian()
    }

    /// Riesz transform `ξ_j/|ξ|`, zero at `ξ = 0`.
    pub fn riesz_transform(grid: &GridSpec, j: usize) -> Self {
        let op = Self::fourier_multiplier(grid, 1, |xi| {
            let r: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            CMat::scalar(1, if r == 0.0 { ZERO } else { c64::new(xi[j] / r, 0.0) })
        })
        .expect("scalar blocks");
        op.assume_hermitian()
    }

    /// Degree-0 extension of a function on the sphere, zero at `ξ = 0`.
    pub fn sphere_multiplier(grid: &GridSpec, n: usize, phi: impl Fn(&[f64]) -> CMat) -> Result<Self> {
        Self::fourier_multiplier(grid, n, |xi| {
            let r: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r == 0.0 {
                CMat::zeros(n)
            } else {
                phi(&xi.iter().map(|v| v / r).collect::<Vec<_>>())
            }
        })
    }

    /// Multiplication by `f(x_p)`.
    pub fn multiplication_fn(grid: &GridSpec, n: usize, f: impl Fn(&[f64]) -> CMat) -> Result<Self> {
        let blocks: Vec<CMat> = grid.points().iter().map(|x| f(x)).collect();
        if blocks.iter().any(|b| b.n() != n) {
            return Err(Error::Config(format!("multiplication blocks must be {n}x{n}")));
        }
        Ok(Self::with_repr(grid, n, Repr::Multiplication(blocks), 0.0))
    }

    /// Multiplication by given per-point blocks (flat grid order).
    pub fn multiplication_blocks(grid: &GridSpec, n: usize, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != grid.num_points() || blocks.iter().any(|b| b.n() != n) {
            return Err(Error::Dimension(format!("need {} blocks of size {n}x{n}", grid.num_points())));
        }
        Ok(Self::with_repr(grid, n, Repr::Multiplication(blocks), 0.0))
    }

    pub fn multiplication(grid: &GridSpec, f: &SpatialFn) -> Result<Self> {
        if f.d() != grid.d {
            return Err(Error::Dimension(format!("function has d={}, grid has d={}", f.d(), grid.d)));
        }
        Self::multiplication_fn(grid, f.n(), |x| f.eval(x))
    }

    /// Multiplication by `f` realized with the given scheme.
    pub fn multiplication_with(grid: &GridSpec, f: &SpatialFn, scheme: MultiplicationScheme) -> Result<Self> {
        match scheme {
            MultiplicationScheme::Collocated => Self::multiplication(grid, f),
            MultiplicationScheme::Dealiased => Self::multiplication_dealiased(grid, f),
        }
    }

    /// Galerkin multiplication: Fourier coefficients of `f` are computed on
    /// the doubled grid so that `(fu)^(k) = Σ_l f̂(k−l) û(l)` has no
    /// wrap-around.
    pub fn multiplication_dealiased(grid: &GridSpec, f: &SpatialFn) -> Result<Self> {
        if f.n() != 1 {
            return Err(Error::Config("dealiased multiplication supports scalar functions".into()));
        }
        let fine = GridSpec::new(grid.d, grid.l, 2 * grid.npts)?;
        let fft2 = FftNd::new(fine.npts, grid.d);
        let mut g: Vec<c64> = fine.points().iter().map(|x| f.eval(x)[(0, 0)]).collect();
        fft2.forward(&mut g);
        let s = 1.0 / fine.num_points() as f64;
        for v in g.iter_mut() {
            *v *= s;
        }
        let np = grid.num_points();
        let (n2, d) = (fine.npts as i64, grid.d);
        let waves: Vec<Vec<i64>> = (0..np).map(|p| grid.wavenumber(p)).collect();
        // T[k, l] = g(k − l), then A = W T W^H / N^d with W[p, k] = e^{2πi k·p/N}
        let mut t = Mat::<c64>::from_fn(np, np, |k, l| {
            let mut idx = 0usize;
            for a in 0..d {
                let m = (waves[k][a] - waves[l][a]).rem_euclid(n2);
                idx = idx * n2 as usize + m as usize;
            }
            g[idx]
        });
        let fft = FftNd::new(grid.npts, d);
        // rows: B = T W^H  (forward transform along l)
        let mut row = vec![ZERO; np];
        for k in 0..np {
            for (l, v) in row.iter_mut().enumerate() {
                *v = t[(k, l)];
            }
            fft.forward(&mut row);
            for (l, v) in row.iter().enumerate() {
                t[(k, l)] = *v;
            }
        }
        // columns: A = W B / N^d
        for q in 0..np {
            fft.inverse_normalized(t.col_as_slice_mut(q));
        }
        let mut op = Self::with_repr(grid, 1, Repr::Dense(t), 0.0);
        if f.eval(&grid.point(0)).is_hermitian(1e-14) {
            op.hermitian = true;
        }
        Ok(op)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> usize {
        self.grid.num_points() * self.n
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn trace_weights(&self) -> &[f64] {
        &self.trace_weights
    }

    pub fn order_hint(&self) -> f64 {
        self.order_hint
    }

    pub fn with_order_hint(mut self, m: f64) -> Self {
        self.order_hint = m;
        self
    }

    pub fn with_trace_weights(mut self, w: Vec<f64>) -> Result<Self> {
        if w.len() != self.side() || w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("trace weights must be nonnegative, one per index".into()));
        }
        self.trace_weights = w;
        Ok(self)
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    fn assume_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    /// Sets the Hermitian flag after verifying `‖A − A*‖ ≤ 1e−10‖A‖`.
    pub fn mark_hermitian(mut self) -> Result<Self> {
        let ok = match &self.repr {
            Repr::Dense(m) => linalg::is_hermitian(m.as_ref(), 1e-10),
            Repr::FourierDiagonal(b) | Repr::Multiplication(b) => b.iter().all(|x| x.is_hermitian(1e-10)),
        };
        if !ok {
            return Err(Error::Domain("operator is not Hermitian within 1e−10".into()));
        }
        self.hermitian = true;
        Ok(self)
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.n != other.n {
            return Err(Error::Dimension(format!(
                "operators live on different spaces: {:?}/n={} vs {:?}/n={}",
                self.grid, self.n, other.grid, other.n
            )));
        }
        Ok(())
    }

    /// Block kernel `c(r) = N^{-d} Σ_k m(ξ_k) e^{2πi k·r/N}` of a Fourier multiplier.
    fn kernel(&self, blocks: &[CMat]) -> Vec<CMat> {
        let n = self.n;
        let np = self.grid.num_points();
        let fft = FftNd::new(self.grid.npts, self.grid.d);
        let mut out = vec![CMat::zeros(n); np];
        let mut buf = vec![ZERO; np];
        for a in 0..n {
            for b in 0..n {
                for (k, v) in buf.iter_mut().enumerate() {
                    *v = blocks[k][(a, b)];
                }
                fft.inverse_normalized(&mut buf);
                for (r, v) in buf.iter().enumerate() {
                    out[r][(a, b)] = *v;
                }
            }
        }
        out
    }

    /// Dense matrix of the operator.
    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.n;
        let side = self.side();
        let (npts, d) = (self.grid.npts, self.grid.d);
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Multiplication(blocks) => {
                let mut m = Mat::<c64>::zeros(side, side);
                for (p, b) in blocks.iter().enumerate() {
                    for i in 0..n {
                        for j in 0..n {
                            m[(p * n + i, p * n + j)] = b[(i, j)];
                        }
                    }
                }
                m
            }
            Repr::FourierDiagonal(blocks) => {
                let c = self.kernel(blocks);
                Mat::from_fn(side, side, |r, s| {
                    let (p, i, q, j) = (r / n, r % n, s / n, s % n);
                    c[diff_index(p, q, npts, d)][(i, j)]
                })
            }
        }
    }

    /// Applies the operator to a vector.
    pub fn apply(&self, u: &[c64]) -> Result<Vec<c64>> {
        if u.len() != self.side() {
            return Err(Error::Dimension(format!("vector of length {} for side {}", u.len(), self.side())));
        }
        let n = self.n;
        Ok(match &self.repr {
            Repr::Dense(m) => (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * u[j]).sum()).collect(),
            Repr::Multiplication(blocks) => {
                let mut out = vec![ZERO; u.len()];
                for (p, b) in blocks.iter().enumerate() {
                    for i in 0..n {
                        out[p * n + i] = (0..n).map(|j| b[(i, j)] * u[p * n + j]).sum();
                    }
                }
                out
            }
            Repr::FourierDiagonal(blocks) => {
                let mut out = u.to_vec();
                self.fourier_apply_in_place(blocks, &mut out);
                out
            }
        })
    }

    /// `u ← IFFT(m · FFT(u))` on a point-major vector.
    fn fourier_apply_in_place(&self, blocks: &[CMat], u: &mut [c64]) {
        let n = self.n;
        let np = self.grid.num_points();
        let fft = FftNd::new(self.grid.npts, self.grid.d);
        let mut comps: Vec<Vec<c64>> = (0..n).map(|a| (0..np).map(|p| u[p * n + a]).collect()).collect();
        for c in comps.iter_mut() {
            fft.forward(c);
        }
        let mut out: Vec<Vec<c64>> = vec![vec![ZERO; np]; n];
        for k in 0..np {
            for a in 0..n {
                out[a][k] = (0..n).map(|b| blocks[k][(a, b)] * comps[b][k]).sum();
            }
        }
        for (a, c) in out.iter_mut().enumerate() {
            fft.inverse_normalized(c);
            for p in 0..np {
                u[p * n + a] = c[p];
            }
        }
    }

    /// Applies the operator to every column of `m` using its structure.
    pub fn apply_to_columns(&self, m: &Mat<c64>) -> Result<Mat<c64>> {
        if m.nrows() != self.side() {
            return Err(Error::Dimension(format!("{} rows for side {}", m.nrows(), self.side())));
        }
        let n = self.n;
        Ok(match &self.repr {
            Repr::Dense(a) => a * m,
            Repr::FourierDiagonal(blocks) => {
                let mut out = m.clone();
                self.fourier_columns(blocks, &mut out);
                out
            }
            Repr::Multiplication(f) => Mat::from_fn(m.nrows(), m.ncols(), |r, s| {
                let (p, i) = (r / n, r % n);
                (0..n).map(|t| f[p][(i, t)] * m[(p * n + t, s)]).sum()
            }),
        })
    }

    fn adjoint_blocks(blocks: &[CMat]) -> Vec<CMat> {
        blocks.iter().map(CMat::adjoint).collect()
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m.adjoint().to_owned()),
            Repr::FourierDiagonal(b) => Repr::FourierDiagonal(Self::adjoint_blocks(b)),
            Repr::Multiplication(b) => Repr::Multiplication(Self::adjoint_blocks(b)),
        };
        Self { repr, ..self.clone() }
    }

    pub fn scale(&self, c: c64) -> Self {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c)),
            Repr::FourierDiagonal(b) => Repr::FourierDiagonal(b.iter().map(|x| x.scale(c)).collect()),
            Repr::Multiplication(b) => Repr::Multiplication(b.iter().map(|x| x.scale(c)).collect()),
        };
        let hermitian = self.hermitian && c.im == 0.0;
        Self { repr, hermitian, ..self.clone() }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: c64, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::FourierDiagonal(a), Repr::FourierDiagonal(b)) => Repr::FourierDiagonal(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let mut r = x.clone();
                        r.axpy(c, y);
                        r
                    })
                    .collect(),
            ),
            (Repr::Multiplication(a), Repr::Multiplication(b)) => Repr::Multiplication(
                a.iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let mut r = x.clone();
                        r.axpy(c, y);
                        r
                    })
                    .collect(),
            ),
            _ => {
                let mut m = self.to_dense();
                let o = other.to_dense();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        m[(i, j)] += c * o[(i, j)];
                    }
                }
                Repr::Dense(m)
            }
        };
        let hermitian = self.hermitian && other.hermitian && c.im == 0.0;
        Ok(Self { repr, hermitian, order_hint: self.order_hint.max(other.order_hint), ..self.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(c64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(c64::new(-1.0, 0.0), other)
    }

    /// Applies a Fourier multiplier to every column of a dense matrix.
    fn fourier_columns(&self, blocks: &[CMat], m: &mut Mat<c64>) {
        for j in 0..m.ncols() {
            self.fourier_apply_in_place(blocks, m.col_as_slice_mut(j));
        }
    }

    /// Multiplies every row of a dense matrix by a Fourier multiplier on the right.
    fn fourier_rows(&self, blocks: &[CMat], m: &mut Mat<c64>) {
        // u T = (T^T u^T)^T and T^T has blocks m(−ξ)^T
        let (np, npts, d) = (self.grid.num_points(), self.grid.npts, self.grid.d);
        let tb: Vec<CMat> = (0..np).map(|k| blocks[negate_index(k, npts, d)].transpose()).collect();
        let mut row = vec![ZERO; m.ncols()];
        for i in 0..m.nrows() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[(i, j)];
            }
            self.fourier_apply_in_place(&tb, &mut row);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
    }

    /// Operator product `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        linalg::ensure_sequential();
        let n = self.n;
        let (npts, d) = (self.grid.npts, self.grid.d);
        let side = self.side();
        let repr = match (&self.repr, &other.repr) {
            (Repr::Multiplication(a), Repr::Multiplication(b)) => {
                Repr::Multiplication(a.iter().zip(b).map(|(x, y)| block_mul(x, y)).collect())
            }
            (Repr::FourierDiagonal(a), Repr::FourierDiagonal(b)) => {
                Repr::FourierDiagonal(a.iter().zip(b).map(|(x, y)| block_mul(x, y)).collect())
            }
            (Repr::Multiplication(f), Repr::FourierDiagonal(mb)) => {
                let c = self.kernel(mb);
                let rows: Vec<Vec<c64>> = (0..side)
                    .into_par_iter()
                    .map(|r| {
                        let (p, i) = (r / n, r % n);
                        let mut row = vec![ZERO; side];
                        for q in 0..self.grid.num_points() {
                            let k = &c[diff_index(p, q, npts, d)];
                            for j in 0..n {
                                row[q * n + j] = (0..n).map(|t| f[p][(i, t)] * k[(t, j)]).sum();
                            }
                        }
                        row
                    })
                    .collect();
                Repr::Dense(Mat::from_fn(side, side, |i, j| rows[i][j]))
            }
            (Repr::FourierDiagonal(mb), Repr::Multiplication(f)) => {
                let c = self.kernel(mb);
                Repr::Dense(Mat::from_fn(side, side, |r, s| {
                    let (p, i, q, j) = (r / n, r % n, s / n, s % n);
                    let k = &c[diff_index(p, q, npts, d)];
                    (0..n).map(|t| k[(i, t)] * f[q][(t, j)]).sum()
                }))
            }
            (Repr::FourierDiagonal(mb), Repr::Dense(m)) => {
                let mut out = m.clone();
                self.fourier_columns(mb, &mut out);
                Repr::Dense(out)
            }
            (Repr::Dense(m), Repr::FourierDiagonal(mb)) => {
                let mut out = m.clone();
                self.fourier_rows(mb, &mut out);
                Repr::Dense(out)
            }
            (Repr::Multiplication(f), Repr::Dense(m)) => {
                Repr::Dense(Mat::from_fn(side, side, |r, s| {
                    let (p, i) = (r / n, r % n);
                    (0..n).map(|t| f[p][(i, t)] * m[(p * n + t, s)]).sum()
                }))
            }
            (Repr::Dense(m), Repr::Multiplication(f)) => {
                Repr::Dense(Mat::from_fn(side, side, |r, s| {
                    let (q, j) = (s / n, s % n);
                    (0..n).map(|t| m[(r, q * n + t)] * f[q][(t, j)]).sum()
                }))
            }
            (Repr::Dense(a), Repr::Dense(b)) => Repr::Dense(a * b),
        };
        Ok(Self {
            grid: self.grid.clone(),
            n,
            repr,
            trace_weights: self.trace_weights.clone(),
            order_hint: self.order_hint + other.order_hint,
            hermitian: false,
        })
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        let mut out = ab.sub(&ba)?;
        out.order_hint = self.order_hint + other.order_hint - 1.0;
        Ok(out)
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        match &self.repr {
            Repr::Dense(m) => m.norm_l2(),
            Repr::Multiplication(b) => b.iter().map(|x| x.norm_fro().powi(2)).sum::<f64>().sqrt(),
            Repr::FourierDiagonal(b) => {
                (b.iter().map(|x| x.norm_fro().powi(2)).sum::<f64>() / self.grid.num_points() as f64).sqrt()
            }
        }
    }

    /// Largest entry modulus of the dense matrix.
    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(self.to_dense().as_ref())
    }

    /// Writes the operator as an 8-byte little-endian header length, a JSON
    /// header and the row-major complex128 matrix.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let m = self.to_dense();
        let header = serde_json::json!({
            "grid": self.grid,
            "n": self.n,
            "rows": m.nrows(),
            "cols": m.ncols(),
            "order_hint": self.order_hint,
            "hermitian": self.hermitian,
            "trace_weights": self.trace_weights,
        });
        let hb = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
        let mut buf = Vec::with_capacity(8 + hb.len() + 16 * m.nrows() * m.ncols());
        buf.extend_from_slice(&(hb.len() as u64).to_le_bytes());
        buf.extend_from_slice(&hb);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 8 {
            return Err(Error::Format("file too short for a header length".into()));
        }
        let hl = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(8..8 + hl).ok_or_else(|| Error::Format("truncated header".into()))?;
        #[derive(serde::Deserialize)]
        struct Header {
            grid: GridSpec,
            n: usize,
            rows: usize,
            cols: usize,
            order_hint: f64,
            hermitian: bool,
            trace_weights: Vec<f64>,
        }
        let h: Header = serde_json::from_slice(body).map_err(|e| Error::Format(e.to_string()))?;
        let data = &bytes[8 + hl..];
        if data.len() != 16 * h.rows * h.cols {
            return Err(Error::Format(format!("expected {} matrix bytes, found {}", 16 * h.rows * h.cols, data.len())));
        }
        let f = |k: usize| f64::from_le_bytes(data[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        let m = Mat::from_fn(h.rows, h.cols, |i, j| {
            let k = 2 * (i * h.cols + j);
            c64::new(f(k), f(k + 1))
        });
        let mut op = Self::from_dense(&h.grid, h.n, m)?.with_trace_weights(h.trace_weights)?;
        op.order_hint = h.order_hint;
        op.hermitian = h.hermitian;
        Ok(op)
    }
}

/// Symbol values `σ(x_p, ξ_k)` for all frequencies at one grid point.
fn symbol_row(sym: &ClassicalSymbol, grid: &GridSpec, x: &[f64], freqs: &[Vec<f64>]) -> Result<Vec<CMat>> {
    if grid.d == 1 {
        // homogeneity: σ_{m−j}(x, ξ) = |ξ|^{m−j} σ_{m−j}(x, sign ξ)
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for c in sym.components() {
            pos.push((c.degree(), c.value(x, &[1.0])?));
            neg.push((c.degree(), c.value(x, &[-1.0])?));
        }
        return Ok(freqs
            .iter()
            .map(|xi| {
                let r = xi[0].abs();
                let phi = cutoff_psi(r);
                let mut out = CMat::zeros(sym.n());
                if phi == 0.0 {
                    return out;
                }
                let parts = if xi[0] > 0.0 { &pos } else { &neg };
                for (deg, v) in parts {
                    out.axpy(c64::new(r, 0.0).powc(*deg) * phi, v);
                }
                out
            })
            .collect());
    }
    freqs.iter().map(|xi| sym.evaluate(x, xi)).collect()
}

/// Kohn–Nirenberg quantization `(Op(σ)u)(x_p) = Σ_k σ(x_p, ξ_k) û(k) e^{iξ_k·x_p}`.
pub fn quantize(sym: &ClassicalSymbol, grid: &GridSpec) -> Result<DiscretizedOperator> {
    if sym.d() != grid.d {
        return Err(Error::Dimension(format!("symbol has d={}, grid has d={}", sym.d(), grid.d)));
    }
    if let Some(s) = sym.spatial_support() {
        grid.check_support(s)?;
    }
    let n = sym.n();
    let order = sym.order().re;
    let freqs = grid.frequencies();
    if sym.is_x_independent() {
        let x0 = vec![0.0; grid.d];
        let blocks = symbol_row(sym, grid, &x0, &freqs)?;
        return Ok(DiscretizedOperator::with_repr(grid, n, Repr::FourierDiagonal(blocks), order));
    }
    let np = grid.num_points();
    let side = np * n;
    let (npts, d) = (grid.npts, grid.d);
    let rows: Vec<Vec<c64>> = (0..np)
        .into_par_iter()
        .map(|p| -> Result<Vec<c64>> {
            let x = grid.point(p);
            let vals = symbol_row(sym, grid, &x, &freqs)?;
            let fft = FftNd::new(npts, d);
            // kernel c(r) = N^{-d} Σ_k σ(x_p, ξ_k) e^{2πi k·r/N}, entry (p, q) = c(p − q)
            let mut kernel = vec![CMat::zeros(n); np];
            let mut buf = vec![ZERO; np];
            for a in 0..n {
                for b in 0..n {
                    for (k, v) in buf.iter_mut().enumerate() {
                        *v = vals[k][(a, b)];
                    }
                    fft.inverse_normalized(&mut buf);
                    for (r, v) in buf.iter().enumerate() {
                        kernel[r][(a, b)] = *v;
                    }
                }
            }
            let mut out = vec![ZERO; n * side];
            for a in 0..n {
                for q in 0..np {
                    let c = &kernel[diff_index(p, q, npts, d)];
                    for b in 0..n {
                        out[a * side + q * n + b] = c[(a, b)];
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let m = Mat::from_fn(side, side, |r, s| rows[r / n][(r % n) * side + s]);
    Ok(DiscretizedOperator::with_repr(grid, n, Repr::Dense(m), order))
}

/// Orthogonal projection onto frequencies with `lo ≤ |ξ| ≤ hi`.
pub fn frequency_band_projector(grid: &GridSpec, n: usize, lo: f64, hi: f64) -> DiscretizedOperator {
    DiscretizedOperator::fourier_multiplier(grid, n, |xi| {
        let r: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r >= lo && r <= hi { CMat::identity(n) } else { CMat::zeros(n) }
    })
    .expect("identity blocks")
    .assume_hermitian()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{compose_symbols, families};

    fn grid1(n: usize) -> GridSpec {
        GridSpec::new(1, 8.0, n).unwrap()
    }

    #[test]
    fn multiplier_dense_matches_apply() {
        let g = GridSpec::new(2, 6.0, 8).unwrap();
        let op = DiscretizedOperator::bessel_potential(&g, 1.0);
        let m = op.to_dense();
        let u: Vec<c64> = (0..64).map(|i| c64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let a = op.apply(&u).unwrap();
        for i in 0..64 {
            let s: c64 = (0..64).map(|j| m[(i, j)] * u[j]).sum();
            assert!((s - a[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn quantize_pure_wave_x_xi() {
        let g = grid1(32);
        let xxi = compose_symbols(
            &families::multiplication_symbol(&crate::spatial::SpatialFn::coordinate(1, 0)),
            &ClassicalSymbol::homogeneous(families::xi_coordinate(1, 0)),
            1,
        )
        .unwrap();
        let op = quantize(&xxi, &g).unwrap();
        for k in [3usize, 7, 30] {
            let xi = g.frequency(k)[0];
            let u: Vec<c64> = g.points().iter().map(|x| c64::from_polar(1.0, xi * x[0])).collect();
            let v = op.apply(&u).unwrap();
            for (j, x) in g.points().iter().enumerate() {
                let expected = u[j] * x[0] * xi * cutoff_psi(xi.abs());
                assert!((v[j] - expected).norm() < 1e-10, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn structured_products_match_dense() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = DiscretizedOperator::multiplication_fn(&g, 2, |x| {
            CMat::from_rows(&[&[c64::new(x[0], 0.0), c64::new(0.0, 1.0)], &[c64::new(1.0, 0.0), c64::new(x[0] * x[0], 0.5)]])
        })
        .unwrap();
        let t = DiscretizedOperator::fourier_multiplier(&g, 2, |xi| {
            CMat::from_rows(&[&[c64::new(xi[0], 0.0), c64::new(1.0, 0.0)], &[c64::new(0.0, xi[0]), c64::new(2.0, 0.0)]])
        })
        .unwrap();
        let dense_t = DiscretizedOperator::from_dense(&g, 2, t.to_dense()).unwrap();
        let dense_f = DiscretizedOperator::from_dense(&g, 2, f.to_dense()).unwrap();
        let reference = (&f.to_dense() * &t.to_dense(), &t.to_dense() * &f.to_dense());
        for (a, b, r) in [
            (&f, &t, &reference.0),
            (&t, &f, &reference.1),
            (&dense_f, &t, &reference.0),
            (&t, &dense_f, &reference.1),
            (&f, &dense_t, &reference.0),
            (&dense_t, &f, &reference.1),
        ] {
            let p = a.compose(b).unwrap().to_dense();
            assert!((&p - r).norm_l2() < 1e-11 * r.norm_l2());
        }
    }

    #[test]
    fn dealiased_multiplication_of_band_limited_function_is_exact() {
        // f = cos(2πx/L) has no wrap-around, so both schemes agree
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let f = SpatialFn::cosine(1, 0.3, 1.0, vec![2.0 * PI / 8.0], 0.0);
        let a = DiscretizedOperator::multiplication_dealiased(&g, &f).unwrap().to_dense();
        let b = DiscretizedOperator::multiplication(&g, &f).unwrap().to_dense();
        // differs only through the Nyquist coupling k − l = ±N
        let diff = (&a - &b).norm_l2();
        assert!(diff < 1.0, "{diff}");
        assert!(linalg::is_hermitian(a.as_ref(), 1e-12));
    }

    #[test]
    fn dealiased_matches_galerkin_sum() {
        let g = GridSpec::new(2, 4.0, 4).unwrap();
        let f = SpatialFn::gaussian(vec![0.2, -0.1], 0.7);
        let a = DiscretizedOperator::multiplication_dealiased(&g, &f).unwrap().to_dense();
        let fine = GridSpec::new(2, 4.0, 8).unwrap();
        let coef = |k: &[i64]| -> c64 {
            let s: c64 = fine
                .points()
                .iter()
                .map(|x| {
                    let ph = -(k[0] as f64 * x[0] + k[1] as f64 * x[1]) * fine.dxi();
                    f.eval(x)[(0, 0)] * c64::from_polar(1.0, ph)
                })
                .sum();
            s / 64.0
        };
        let np = g.num_points();
        for p in [0usize, 5, 11] {
            for q in [0usize, 3, 14] {
                let (xp, xq) = (g.point(p), g.point(q));
                let mut s = ZERO;
                for k in 0..np {
                    for l in 0..np {
                        let (wk, wl) = (g.wavenumber(k), g.wavenumber(l));
                        let (fk, fl) = (g.frequency(k), g.frequency(l));
                        let ph = fk[0] * xp[0] + fk[1] * xp[1] - fl[0] * xq[0] - fl[1] * xq[1];
                        s += coef(&[wk[0] - wl[0], wk[1] - wl[1]]) * c64::from_polar(1.0, ph);
                    }
                }
                s /= np as f64;
                assert!((s - a[(p, q)]).norm() < 1e-12, "{p} {q}");
            }
        }
    }

    #[test]
    fn binary_roundtrip() {
        let g = grid1(8);
        let op = DiscretizedOperator::riesz_potential(&g, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("op.bin");
        op.write_binary(&path).unwrap();
        let back = DiscretizedOperator::read_binary(&path).unwrap();
        assert_eq!(back.to_dense(), op.to_dense());
        assert_eq!(back.grid(), op.grid());
        let bytes = std::fs::read(&path).unwrap();
        let hl = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 8 + hl + 16 * 64);
    }

    #[test]
    fn support_margin_is_enforced() {
        let g = grid1(16);
        let s = families::multiplication_symbol(&SpatialFn::bump(vec![0.0], 3.0));
        assert!(matches!(quantize(&s, &g), Err(Error::Geometry(_))));
    }
}

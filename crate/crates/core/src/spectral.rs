//! Singular value functions and the spectral asymptotics read off them.

use crate::error::{Error, Result};
use crate::linalg;
use crate::quantize::{DiscretizedOperator, Repr};
use crate::spatial::SpatialFn;
use num_complex::Complex64 as c64;

/// Relative threshold below which singular values count as numerically zero
/// when measuring the effective weight.
pub const NULL_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_WINDOW: (f64, f64) = (0.02, 0.15);
pub const WEYL_SAMPLES: usize = 200;

/// `t ↦ μ(t)` as a right-continuous step function of weighted values.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularValueFunction {
    values: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SingularValueFunction {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.iter().any(|(v, w)| !(v.is_finite() && *v >= 0.0 && w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("singular values must be finite and ≥ 0 with positive weights".into()));
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { values, weights, cumulative })
    }

    pub fn with_unit_weights(values: Vec<f64>) -> Result<Self> {
        Self::new(values.into_iter().map(|v| (v, 1.0)).collect())
    }

    /// SVF of a discretized operator. Every singular value carries the
    /// (uniform) trace weight of the operator.
    pub fn from_operator(a: &DiscretizedOperator) -> Result<Self> {
        let w = a.trace_weights();
        let w0 = w.first().copied().unwrap_or(1.0);
        if w.iter().any(|v| (v - w0).abs() > 1e-14 * w0.abs()) {
            return Err(Error::Config("singular value weights need a uniform trace weight".into()));
        }
        if w0 <= 0.0 {
            return Err(Error::Config("trace weight must be positive".into()));
        }
        let values = match a.repr() {
            Repr::FourierDiagonal(blocks) | Repr::Multiplication(blocks) => {
                blocks.iter().flat_map(|b| b.singular_values()).collect()
            }
            Repr::Dense(m) => {
                if a.is_hermitian_flagged() {
                    linalg::hermitian_eigenvalues(m.as_ref())?.into_iter().map(f64::abs).collect()
                } else {
                    linalg::singular_values(m.as_ref())?
                }
            }
        };
        Self::new(values.into_iter().map(|v| (v, w0)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Weight carried by values above `rel · max`.
    pub fn effective_weight(&self, rel: f64) -> f64 {
        let top = self.values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0.0;
        }
        self.distribution(rel * top)
    }

    /// Value at the first index whose cumulative weight strictly exceeds `t`.
    pub fn mu(&self, t: f64) -> f64 {
        let i = self.cumulative.partition_point(|c| *c <= t);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Total weight of values strictly above `s`.
    pub fn distribution(&self, s: f64) -> f64 {
        let i = self.values.partition_point(|v| *v > s);
        if i == 0 { 0.0 } else { self.cumulative[i - 1] }
    }

    /// `∫_0^N μ(t) dt`, exact for the step function.
    pub fn integral(&self, big_n: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for (v, c) in self.values.iter().zip(&self.cumulative) {
            if *c >= big_n {
                return acc + v * (big_n - start).max(0.0);
            }
            acc += v * (c - start);
            start = *c;
        }
        acc
    }

    /// `sup_t t^{1/p} μ(t)`, attained at the right ends of the steps.
    pub fn weak_schatten_norm(&self, p: f64) -> f64 {
        self.values.iter().zip(&self.cumulative).map(|(v, c)| c.powf(1.0 / p) * v).fold(0.0, f64::max)
    }

    /// `(t, μ(t))` on `count` log-spaced points in `[lo, hi]`.
    pub fn log_samples(&self, lo: f64, hi: f64, count: usize) -> Vec<(f64, f64)> {
        log_grid(lo, hi, count).into_iter().map(|t| (t, self.mu(t))).collect()
    }
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() { sorted[i] * (1.0 - frac) + sorted[i + 1] * frac } else { sorted[i] }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct WeylEstimate {
    pub limit: f64,
    pub window: (f64, f64),
    /// interquartile range of `t^{m/d} μ(t)` over the window
    pub spread: f64,
    pub grids_used: Vec<usize>,
}

/// Default window `(0.02, 0.15)` times the effective weight (falls back to
/// the total weight when every value is below the null threshold).
pub fn default_window(svf: &SingularValueFunction) -> (f64, f64) {
    let mut w = svf.effective_weight(NULL_THRESHOLD);
    if w == 0.0 {
        w = svf.total_weight();
    }
    (DEFAULT_WINDOW.0 * w, DEFAULT_WINDOW.1 * w)
}

/// Median of `t^{m/d} μ(t)` over 200 log-spaced points of the window.
pub fn weyl_limit(svf: &SingularValueFunction, m: f64, d: usize, window: (f64, f64)) -> Result<WeylEstimate> {
    let (lo, hi) = window;
    if !(m > 0.0) || d == 0 {
        return Err(Error::Domain(format!("Weyl exponent needs m > 0 and d > 0, got m={m}, d={d}")));
    }
    if !(lo > 0.0 && lo < hi && hi <= 0.5 * svf.total_weight()) {
        return Err(Error::Range(format!(
            "window ({lo}, {hi}) must satisfy 0 < lo < hi ≤ {}",
            0.5 * svf.total_weight()
        )));
    }
    let e = m / d as f64;
    let mut g: Vec<f64> = log_grid(lo, hi, WEYL_SAMPLES).iter().map(|t| t.powf(e) * svf.mu(*t)).collect();
    g.sort_by(f64::total_cmp);
    Ok(WeylEstimate {
        limit: quantile(&g, 0.5),
        window,
        spread: quantile(&g, 0.75) - quantile(&g, 0.25),
        grids_used: Vec::new(),
    })
}

/// `(1/log N) ∫_0^N μ(t) dt`.
pub fn dixmier_log_average(svf: &SingularValueFunction, nmax: f64) -> Result<f64> {
    if !(nmax > 1.0 && nmax <= svf.total_weight()) {
        return Err(Error::Range(format!("N must lie in (1, {}], got {nmax}", svf.total_weight())));
    }
    Ok(svf.integral(nmax) / nmax.ln())
}

/// Eigen-decomposition of a Hermitian `A` and the weighted diagonal of a
/// weight operator in its eigenbasis, reusable across many `λ`.
pub struct MicrolocalCounter {
    eigenvalues: Vec<f64>,
    diagonal: Vec<c64>,
}

impl MicrolocalCounter {
    /// Prepares `λ ↦ Tr(M_φ Q χ_{[0,λ]}(A))`.
    pub fn new(a: &DiscretizedOperator, q: &DiscretizedOperator, phi: &SpatialFn) -> Result<Self> {
        let m_phi = DiscretizedOperator::multiplication(a.grid(), phi)?;
        let weight = m_phi.compose(q)?;
        Self::with_weight(a, &weight)
    }

    /// Prepares `λ ↦ Tr(B χ_{[0,λ]}(A))` for a given `B`.
    pub fn with_weight(a: &DiscretizedOperator, b: &DiscretizedOperator) -> Result<Self> {
        if a.grid() != b.grid() || a.n() != b.n() {
            return Err(Error::Dimension("counting operator and weight live on different spaces".into()));
        }
        let dense = a.to_dense();
        if !a.is_hermitian_flagged() && !linalg::is_hermitian(dense.as_ref(), 1e-10) {
            return Err(Error::Domain("microlocal counting needs a Hermitian operator".into()));
        }
        let (eigenvalues, v) = linalg::hermitian_eigen(dense.as_ref())?;
        drop(dense);
        let bv = b.apply_to_columns(&v)?;
        let w = a.trace_weights();
        let diagonal = (0..v.ncols())
            .map(|i| (0..v.nrows()).map(|r| v[(r, i)].conj() * bv[(r, i)] * w[r]).sum())
            .collect();
        Ok(Self { eigenvalues, diagonal })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn count_complex(&self, lambda: f64) -> c64 {
        self.eigenvalues
            .iter()
            .zip(&self.diagonal)
            .filter(|(e, _)| **e >= 0.0 && **e <= lambda)
            .map(|(_, d)| *d)
            .sum()
    }

    pub fn count(&self, lambda: f64) -> f64 {
        self.count_complex(lambda).re
    }
}

/// `Tr(M_φ Q χ_{[0,λ]}(A))` (real part).
pub fn microlocal_counting(a: &DiscretizedOperator, q: &DiscretizedOperator, phi: &SpatialFn, lambda: f64) -> Result<f64> {
    Ok(MicrolocalCounter::new(a, q, phi)?.count(lambda))
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct TauberianReport {
    pub p: f64,
    pub s_values: Vec<f64>,
    /// `s^p · n(s)` with `n(s)` the weight above `s`
    pub distribution_side: Vec<f64>,
    /// `t · μ(t)^p` at the matched `t = n(s)`
    pub quantile_side: Vec<f64>,
    pub max_discrepancy: f64,
}

/// Compares the two sides of the distribution/quantile duality on matched grids.
pub fn tauberian_duality_check(svf: &SingularValueFunction, p: f64, s_grid: &[f64]) -> Result<TauberianReport> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("exponent p must be positive, got {p}")));
    }
    let mut report = TauberianReport {
        p,
        s_values: s_grid.to_vec(),
        distribution_side: Vec::with_capacity(s_grid.len()),
        quantile_side: Vec::with_capacity(s_grid.len()),
        max_discrepancy: 0.0,
    };
    for &s in s_grid {
        let n = svf.distribution(s);
        let left = s.powf(p) * n;
        let right = n * svf.mu(n).powf(p);
        let scale = left.abs().max(right.abs());
        if scale > 0.0 {
            report.max_discrepancy = report.max_discrepancy.max((left - right).abs() / scale);
        }
        report.distribution_side.push(left);
        report.quantile_side.push(right);
    }
    Ok(report)
}

/// Levels halfway (geometrically) between consecutive distinct values whose
/// cumulative weight falls in `window`, thinned to at most `count`.
pub fn tauberian_levels(svf: &SingularValueFunction, window: (f64, f64), count: usize) -> Vec<f64> {
    let mut levels = Vec::new();
    let vals = svf.values();
    let cum = &svf.cumulative;
    for i in 0..vals.len().saturating_sub(1) {
        if cum[i] < window.0 || cum[i] > window.1 {
            continue;
        }
        if vals[i + 1] < vals[i] && vals[i + 1] > 0.0 {
            levels.push((vals[i] * vals[i + 1]).sqrt());
        }
    }
    if levels.len() > count && count > 0 {
        let step = levels.len() as f64 / count as f64;
        levels = (0..count).map(|k| levels[(k as f64 * step) as usize]).collect();
    }
    levels
}

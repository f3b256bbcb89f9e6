//! Ellipticity certificates, parametrices and parameter-dependent resolvent
//! symbols.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::jet::MatJet;
use crate::quadrature::BoxDomain;
use crate::symbols::{ClassicalSymbol, ComponentJetFn, HomogeneousComponent, JetKind, leibniz_term};
use num_complex::Complex64 as c64;
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_SPHERE_SAMPLES: usize = 200;
pub const DEFAULT_SPACE_SAMPLES: usize = 200;

/// Numerical certificate for the ellipticity conditions on a sample set.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EllipticityReport {
    pub is_elliptic: bool,
    /// sup ‖σ_m(x,u)^{-1}‖ over samples with |u| = 1
    pub constant_c: f64,
    /// inf of the smallest singular value of σ_m(x,u)
    pub modulus_bound_c2: f64,
    pub samples: usize,
    /// smallest eigenvalue of σ_m(x,u) when every sample is Hermitian
    pub spectral_floor: Option<f64>,
    /// largest eigenvalue of σ_m(x,u) when every sample is Hermitian
    pub spectral_ceiling: Option<f64>,
    pub offending: Option<(Vec<f64>, Vec<f64>)>,
}

impl EllipticityReport {
    /// Positive principal symbol: Hermitian samples with a positive floor.
    pub fn is_positive(&self) -> bool {
        self.is_elliptic && self.spectral_floor.is_some_and(|f| f > 0.0)
    }

    /// Default strict-positivity shift, half the sampled floor.
    pub fn positivity_shift(&self) -> Option<f64> {
        self.spectral_floor.filter(|f| *f > 0.0).map(|f| 0.5 * f)
    }
}

/// Deterministic, roughly uniform directions on `S^{d−1}`.
pub fn sphere_samples(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(1))
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count.max(1) as f64;
                let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
                vec![snap(t.cos()), snap(t.sin())]
            })
            .collect(),
        _ => {
            // Fibonacci lattice on S², generalized by normalizing Kronecker points for d > 3
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            (0..count.max(1))
                .map(|k| {
                    if d == 3 {
                        let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = 2.0 * PI * k as f64 / golden;
                        vec![r * phi.cos(), r * phi.sin(), z]
                    } else {
                        let v: Vec<f64> = (0..d)
                            .map(|i| ((k as f64 + 1.0) * (2.0f64).powf((i + 1) as f64 / (d + 1) as f64)).fract() - 0.5)
                            .collect();
                        let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
                        v.iter().map(|a| a / nrm).collect()
                    }
                })
                .collect()
        }
    }
}

/// Low-discrepancy points in a box (Kronecker sequence).
pub fn box_samples(domain: &BoxDomain, count: usize) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let alphas: Vec<f64> = (0..d).map(|i| ((i + 2) as f64).sqrt().fract()).collect();
    (0..count.max(1))
        .map(|k| {
            (0..d)
                .map(|i| {
                    let t = (0.5 + (k as f64) * alphas[i]).fract();
                    domain.lo[i] + t * (domain.hi[i] - domain.lo[i])
                })
                .collect()
        })
        .collect()
}

fn default_space_points(sym: &ClassicalSymbol, count: usize) -> Vec<Vec<f64>> {
    if sym.is_x_independent() {
        return vec![vec![0.0; sym.d()]];
    }
    let domain = sym.spatial_support().cloned().unwrap_or_else(|| BoxDomain::cube(sym.d(), 2.0));
    box_samples(&domain, count)
}

/// Samples the principal symbol on space points × unit directions.
pub fn check_ellipticity(sym: &ClassicalSymbol, sphere_count: usize, space_count: usize) -> Result<EllipticityReport> {
    let principal = sym.principal();
    let dirs = sphere_samples(sym.d(), sphere_count);
    let points = default_space_points(sym, space_count);
    let mut report = EllipticityReport {
        is_elliptic: true,
        constant_c: 0.0,
        modulus_bound_c2: f64::INFINITY,
        samples: 0,
        spectral_floor: Some(f64::INFINITY),
        spectral_ceiling: Some(f64::NEG_INFINITY),
        offending: None,
    };
    let mut samples = Vec::with_capacity(points.len() * dirs.len());
    let mut scale = 0.0f64;
    for x in &points {
        for u in &dirs {
            let s = principal.value(x, u)?;
            let sv = s.singular_values();
            scale = scale.max(sv.iter().copied().fold(0.0, f64::max));
            samples.push((x, u, s, sv));
        }
    }
    for (x, u, s, sv) in samples {
        report.samples += 1;
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > 1e-12 * scale.max(1e-300)) || !smin.is_finite() {
            report.is_elliptic = false;
            report.constant_c = f64::INFINITY;
            report.modulus_bound_c2 = 0.0;
            report.spectral_floor = None;
            report.spectral_ceiling = None;
            report.offending = Some((x.clone(), u.clone()));
            return Ok(report);
        }
        report.constant_c = report.constant_c.max(1.0 / smin);
        report.modulus_bound_c2 = report.modulus_bound_c2.min(smin);
        if report.spectral_floor.is_some() {
            if s.is_hermitian(1e-12) {
                let (ev, _) = s.hermitian_eigen()?;
                let lo = ev.first().copied().unwrap_or(0.0);
                let hi = ev.last().copied().unwrap_or(0.0);
                report.spectral_floor = report.spectral_floor.map(|f| f.min(lo));
                report.spectral_ceiling = report.spectral_ceiling.map(|f| f.max(hi));
            } else {
                report.spectral_floor = None;
                report.spectral_ceiling = None;
            }
        }
    }
    Ok(report)
}

/// Jets of the first `jmax + 1` terms of the left inverse of `σ − λ`:
/// term `k` is returned at order `order + jmax − k`.
///
/// With `lambda = None` this is the parametrix recursion.
pub fn inverse_recursion(
    sym: &ClassicalSymbol,
    x: &[f64],
    xi: &[f64],
    order: usize,
    jmax: usize,
    lambda: Option<c64>,
) -> Result<Vec<MatJet>> {
    let d = sym.d();
    let comps = sym.components();
    let top = order + jmax;
    let mut a: Vec<Option<MatJet>> = Vec::with_capacity(jmax + 1);
    for l in 0..=jmax {
        a.push(match comps.get(l) {
            Some(c) => Some(c.jet(x, xi, top - l)?),
            None => None,
        });
    }
    if let (Some(lam), Some(a0)) = (lambda, a[0].as_mut()) {
        *a0 = a0.add_constant(&CMat::scalar(a0.n(), -lam));
    }
    let a0 = a[0].as_ref().expect("principal component");
    let b0 = a0.inverse().map_err(|_| Error::SingularResolvent {
        location: format!("x={x:?}, ξ={xi:?}, λ={}", lambda.unwrap_or_default()),
    })?;
    let b0_value = b0.clone();
    let mut b = vec![b0];
    for j in 1..=jmax {
        let ord_j = top - j;
        let mut acc = MatJet::zeros(2 * d, ord_j, a0.n());
        for (k, bk) in b.iter().enumerate() {
            for l in 0..=(j - k) {
                let s = j - k - l;
                if l == 0 && s == 0 {
                    continue;
                }
                let Some(al) = &a[l] else { continue };
                if s > 0 && comps[l].is_x_independent() {
                    continue;
                }
                acc = acc.add(&leibniz_term(bk, al, d, s, ord_j)?);
            }
        }
        let bj = acc.mul(&b0_value.truncate(ord_j)).scale_real(-1.0);
        b.push(bj);
    }
    Ok(b)
}

/// Parametrix symbol of order `−m` with `big_n` components.
pub fn parametrix(sym: &ClassicalSymbol, big_n: usize) -> Result<ClassicalSymbol> {
    let report = check_ellipticity(sym, DEFAULT_SPHERE_SAMPLES, DEFAULT_SPACE_SAMPLES)?;
    if !report.is_elliptic {
        return Err(Error::NotElliptic(format!("{report:?}")));
    }
    parametrix_unchecked(sym, big_n)
}

/// Parametrix without the sampling certificate.
pub fn parametrix_unchecked(sym: &ClassicalSymbol, big_n: usize) -> Result<ClassicalSymbol> {
    if big_n == 0 {
        return Err(Error::Config("truncation must be positive".into()));
    }
    let d = sym.d();
    let n = sym.n();
    let order = -sym.order();
    let x_indep = sym.is_x_independent();
    let kind = if sym.components().iter().all(|c| c.kind() == JetKind::Analytic) {
        JetKind::Analytic
    } else {
        JetKind::FiniteDifference
    };
    let mut comps = Vec::with_capacity(big_n);
    for j in 0..big_n {
        let s = sym.clone();
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], ord: usize| {
            let mut terms = inverse_recursion(&s, x, xi, ord, j, None)?;
            Ok(terms.pop().expect("nonempty recursion"))
        });
        comps.push(HomogeneousComponent::from_jet_fn(order - j as f64, d, n, x_indep, kind, jet_fn));
    }
    let out = ClassicalSymbol::new(order, d, n, comps)?;
    Ok(match sym.spatial_support() {
        Some(b) => out.with_support(b.clone()),
        None => out,
    })
}

/// Region `{|λ| < r} ∪ {|arg λ − π| < π/4}` where resolvent symbols live.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct KeyholeSpec {
    pub arc_radius: f64,
    pub ray_angle: f64,
    pub half_aperture: f64,
}

impl KeyholeSpec {
    pub fn new(arc_radius: f64) -> Result<Self> {
        if !(arc_radius > 0.0) {
            return Err(Error::Config(format!("arc radius must be positive, got {arc_radius}")));
        }
        Ok(Self { arc_radius, ray_angle: PI, half_aperture: PI / 4.0 })
    }

    /// Arc radius at half the certified floor.
    pub fn from_report(report: &EllipticityReport) -> Result<Self> {
        let floor = report
            .spectral_floor
            .filter(|f| *f > 0.0)
            .ok_or_else(|| Error::NotElliptic("no positive spectral floor".into()))?;
        Self::new(0.5 * floor)
    }

    pub fn contains(&self, lambda: c64) -> bool {
        if lambda.norm() < self.arc_radius {
            return true;
        }
        let mut diff = (lambda.arg() - self.ray_angle).abs();
        if diff > PI {
            diff = 2.0 * PI - diff;
        }
        diff < self.half_aperture
    }
}

/// The terms `σ(B)⁰_{−m−j}(x, ξ, λ)` of the resolvent parametrix.
#[derive(Clone, Debug)]
pub struct ResolventSymbols {
    symbol: ClassicalSymbol,
    lambda: c64,
    terms: usize,
}

impl ResolventSymbols {
    pub fn lambda(&self) -> c64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms == 0
    }

    /// Degree `−m − j` of term `j`.
    pub fn degree(&self, j: usize) -> c64 {
        -self.symbol.order() - j as f64
    }

    /// All terms at `(x, ξ)`.
    pub fn values(&self, x: &[f64], xi: &[f64]) -> Result<Vec<CMat>> {
        Ok(inverse_recursion(&self.symbol, x, xi, 0, self.terms - 1, Some(self.lambda))?
            .iter()
            .map(MatJet::value)
            .collect())
    }

    pub fn term(&self, j: usize, x: &[f64], xi: &[f64]) -> Result<CMat> {
        Ok(inverse_recursion(&self.symbol, x, xi, 0, j, Some(self.lambda))?[j].value())
    }
}

/// Resolvent-symbol recursion for `σ − λ`.
pub fn resolvent_symbols(sym: &ClassicalSymbol, lambda: c64, big_n: usize) -> Result<ResolventSymbols> {
    if big_n == 0 {
        return Err(Error::Config("truncation must be positive".into()));
    }
    if sym.order().im != 0.0 || sym.order().re <= 0.0 {
        return Err(Error::Domain(format!("resolvent symbols need real positive order, got {}", sym.order())));
    }
    Ok(ResolventSymbols { symbol: sym.clone(), lambda, terms: big_n })
}

/// Sup of `‖σ(B)⁰_{−m}‖ (1+|ξ|²)^{m/2} (1+|λ|)` over `λ = −s` and the sample set.
///
/// This product weight grows like `min(|ξ|^m, |λ|)` when both are large, so
/// the value depends on the sample range; see [`resolvent_joint_decay_constant`].
pub fn resolvent_decay_constant(sym: &ClassicalSymbol, xs: &[Vec<f64>], xis: &[Vec<f64>], ss: &[f64]) -> Result<f64> {
    let m = sym.order().re;
    sup_weighted_resolvent(sym, xs, xis, ss, |r2, s| (1.0 + r2).powf(m / 2.0) * (1.0 + s))
}

/// Sup of `‖σ(B)⁰_{−m}‖ ((1+|ξ|²)^{m/2} + |λ|)` over `λ = −s` and the sample set.
pub fn resolvent_joint_decay_constant(sym: &ClassicalSymbol, xs: &[Vec<f64>], xis: &[Vec<f64>], ss: &[f64]) -> Result<f64> {
    let m = sym.order().re;
    sup_weighted_resolvent(sym, xs, xis, ss, |r2, s| (1.0 + r2).powf(m / 2.0) + s)
}

fn sup_weighted_resolvent(
    sym: &ClassicalSymbol,
    xs: &[Vec<f64>],
    xis: &[Vec<f64>],
    ss: &[f64],
    weight: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let mut c = 0.0f64;
    for &s in ss {
        let lam = c64::new(-s, 0.0);
        for x in xs {
            for xi in xis {
                let b0 = inverse_recursion(sym, x, xi, 0, 0, Some(lam))?[0].value();
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                c = c.max(b0.op_norm() * weight(r2, s));
            }
        }
    }
    Ok(c)
}

//! Closed-form right-hand sides of the spectral asymptotics, commutator
//! builders and random models.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::linalg;
use crate::powers::matrix_power;
use crate::quadrature::{BoxDomain, BoxRule, SphereRule};
use crate::quantize::{DiscretizedOperator, GridSpec, MultiplicationScheme, Repr};
use crate::spatial::SpatialFn;
use crate::symbols::{ClassicalSymbol, HomogeneousComponent};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Relative disagreement between two quadrature levels that triggers a warning.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

/// Resolution of the phase-space quadratures.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct PhaseSpaceQuadrature {
    pub space_panels: usize,
    pub sphere_resolution: usize,
}

impl Default for PhaseSpaceQuadrature {
    fn default() -> Self {
        Self { space_panels: 8, sphere_resolution: 64 }
    }
}

impl PhaseSpaceQuadrature {
    pub fn refined(&self) -> Self {
        Self { space_panels: 2 * self.space_panels, sphere_resolution: 2 * self.sphere_resolution }
    }
}

/// A predicted constant with its quadrature self-check.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Prediction {
    /// value at the refined quadrature level
    pub value: f64,
    pub coarse_value: f64,
    pub refinement_gap: f64,
    pub precision_warning: bool,
}

impl Prediction {
    fn from_levels(coarse: f64, fine: f64) -> Self {
        let gap = if fine != 0.0 { (fine - coarse).abs() / fine.abs() } else { (fine - coarse).abs() };
        Self { value: fine, coarse_value: coarse, refinement_gap: gap, precision_warning: gap > REFINEMENT_TOLERANCE }
    }
}

fn two_levels(base: PhaseSpaceQuadrature, f: impl Fn(&PhaseSpaceQuadrature) -> Result<f64>) -> Result<Prediction> {
    let coarse = f(&base)?;
    let fine = f(&base.refined())?;
    Ok(Prediction::from_levels(coarse, fine))
}

/// `τ(|B|^q) = τ((B*B)^{q/2})`, with zero eigenvalues mapped to zero.
pub fn trace_modulus_power(b: &CMat, q: f64) -> Result<f64> {
    let (vals, _) = (&b.adjoint() * b).hermitian_eigen()?;
    let top = vals.iter().copied().fold(0.0, f64::max);
    Ok(vals.iter().filter(|v| **v > 1e-28 * top.max(f64::MIN_POSITIVE)).map(|v| v.powf(q / 2.0)).sum())
}

fn broadcast(v: CMat, n: usize) -> Result<CMat> {
    match v.n() {
        k if k == n => Ok(v),
        1 => Ok(CMat::scalar(n, v[(0, 0)])),
        k => Err(Error::Dimension(format!("function is {k}x{k}, expected {n}x{n}"))),
    }
}

fn support_of(f: &SpatialFn) -> Result<&BoxDomain> {
    f.support().ok_or_else(|| Error::Domain(format!("{} has no compact support box", f.label())))
}

/// `∫_{S^{d−1}} ∫ g(x, u) dx du` over the support of `f`.
fn phase_space_integral(
    f: &SpatialFn,
    d: usize,
    quad: &PhaseSpaceQuadrature,
    g: impl Fn(&[f64], &[f64]) -> Result<f64> + Sync,
) -> Result<f64> {
    let space = BoxRule::new(support_of(f)?, quad.space_panels, 8);
    let sphere = SphereRule::new(d, quad.sphere_resolution)?;
    let parts: Vec<f64> = space
        .points
        .par_iter()
        .zip(&space.weights)
        .map(|(x, wx)| -> Result<f64> {
            let mut acc = 0.0;
            for (u, wu) in sphere.points.iter().zip(&sphere.weights) {
                acc += g(x, u)? * wu;
            }
            Ok(acc * wx)
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

/// `d^{−m/d} (2π)^{−m} [∫_{S^{d−1}} ∫ τ(|σ_{−m}(x,u) f(x)|^{d/m}) dx du]^{m/d}`.
pub fn expected_weyl(sym: &ClassicalSymbol, f: &SpatialFn, m: f64, d: usize) -> Result<Prediction> {
    expected_weyl_with(sym, f, m, d, PhaseSpaceQuadrature::default())
}

pub fn expected_weyl_with(
    sym: &ClassicalSymbol,
    f: &SpatialFn,
    m: f64,
    d: usize,
    quad: PhaseSpaceQuadrature,
) -> Result<Prediction> {
    if !(m > 0.0) {
        return Err(Error::Domain(format!("order −m needs m > 0, got m={m}")));
    }
    if (sym.order() - c64::new(-m, 0.0)).norm() > 1e-12 || sym.d() != d || f.d() != d {
        return Err(Error::Dimension(format!("symbol has order {} in d={}, expected −{m} in d={d}", sym.order(), sym.d())));
    }
    let n = sym.n();
    let principal = sym.principal();
    let q = d as f64 / m;
    let scale = (d as f64).powf(-m / d as f64) * (2.0 * PI).powf(-m);
    two_levels(quad, |qd| {
        let integral = phase_space_integral(f, d, qd, |x, u| {
            let fx = broadcast(f.eval(x), n)?;
            if fx.norm_max() == 0.0 {
                return Ok(0.0);
            }
            trace_modulus_power(&(&principal.value(x, u)? * &fx), q)
        })?;
        Ok(scale * integral.powf(m / d as f64))
    })
}

/// `d^{−m/d} (2π)^{−m} [∫_{S^{d−1}} ∫ τ(g^{2d/m} |σ(A)_m|^{−d/m} p) dx du]^{m/d}`
/// for `M_{pg} |A|^{−1} M_{pg}`.
pub fn expected_weyl_localized(a: &ClassicalSymbol, g: &SpatialFn, p: &CMat) -> Result<Prediction> {
    let m = a.order();
    if m.im != 0.0 || m.re <= 0.0 {
        return Err(Error::Domain(format!("elliptic operator needs real positive order, got {m}")));
    }
    let (m, d, n) = (m.re, a.d(), a.n());
    if p.n() != n || g.d() != d {
        return Err(Error::Dimension("projection or localizer does not match the symbol".into()));
    }
    let principal = a.principal();
    let q = d as f64 / m;
    let scale = (d as f64).powf(-m / d as f64) * (2.0 * PI).powf(-m);
    two_levels(PhaseSpaceQuadrature::default(), |qd| {
        let integral = phase_space_integral(g, d, qd, |x, u| {
            let gx = g.scalar_value(x).re;
            if gx == 0.0 {
                return Ok(0.0);
            }
            let s = principal.value(x, u)?;
            let modulus = matrix_power(&(&s.adjoint() * &s), c64::new(-q / 2.0, 0.0))?;
            Ok(gx.abs().powf(2.0 * q) * (&modulus * p).trace().re)
        })?;
        Ok(scale * integral.powf(m / d as f64))
    })
}

/// `d^{−1} (2π)^{−d} ∫_{S^{d−1}} ∫ τ(f(x)* σ_{−d}(x,u) f(x)) dx du`, the
/// Dixmier value of `M_{f*} Op(σ) M_f` for `σ` of order `−d`.
pub fn expected_dixmier(sym: &ClassicalSymbol, f: &SpatialFn) -> Result<Prediction> {
    let d = sym.d();
    if (sym.order() + d as f64).norm() > 1e-12 || f.d() != d {
        return Err(Error::Dimension(format!("Dixmier value needs order −{d}, got {}", sym.order())));
    }
    let n = sym.n();
    let principal = sym.principal();
    let scale = 1.0 / (d as f64 * (2.0 * PI).powi(d as i32));
    two_levels(PhaseSpaceQuadrature::default(), |qd| {
        let integral = phase_space_integral(f, d, qd, |x, u| {
            let fx = broadcast(f.eval(x), n)?;
            Ok((&(&fx.adjoint() * &principal.value(x, u)?) * &fx).trace().re)
        })?;
        Ok(scale * integral)
    })
}

/// Coefficient `c` of `Tr(M_φ Q χ_{[0,λ]}(A)) ~ c λ^{d/m}`:
/// `c = (1/(d(2π)^d)) ∫_{S^{d−1}} ∫ τ(φ(x) q(x,u) σ_m(x,u)^{−d/m}) dx du`.
pub fn microlocal_prediction(a: &ClassicalSymbol, q: &HomogeneousComponent, phi: &SpatialFn) -> Result<Prediction> {
    let m = a.order();
    if m.im != 0.0 || m.re <= 0.0 {
        return Err(Error::Domain(format!("counting operator needs real positive order, got {m}")));
    }
    let (m, d, n) = (m.re, a.d(), a.n());
    if q.degree() != c64::new(0.0, 0.0) || q.d() != d || phi.d() != d {
        return Err(Error::Dimension("weight symbol must be degree 0 in the same dimension".into()));
    }
    let principal = a.principal();
    let scale = 1.0 / (d as f64 * (2.0 * PI).powi(d as i32));
    let z = c64::new(-(d as f64) / m, 0.0);
    two_levels(PhaseSpaceQuadrature::default(), |qd| {
        let integral = phase_space_integral(phi, d, qd, |x, u| {
            let ph = broadcast(phi.eval(x), n)?;
            if ph.norm_max() == 0.0 {
                return Ok(0.0);
            }
            let w = &ph * &broadcast(q.value(x, u)?, n)?;
            Ok((&w * &matrix_power(&principal.value(x, u)?, z)?).trace().re)
        })?;
        Ok(scale * integral)
    })
}

/// `[T_φ, M_f]` with `T_φ` the degree-0 extension of `φ` (zero at `ξ = 0`).
pub fn cz_commutator_build(
    phi: &HomogeneousComponent,
    f: &SpatialFn,
    grid: &GridSpec,
    scheme: MultiplicationScheme,
) -> Result<DiscretizedOperator> {
    if grid.d < 2 {
        return Err(Error::Domain("Calderón–Zygmund commutators need d ≥ 2".into()));
    }
    if phi.degree() != c64::new(0.0, 0.0) || phi.d() != grid.d || f.d() != grid.d {
        return Err(Error::Dimension("φ must be degree 0 and match the grid dimension".into()));
    }
    grid.check_support(support_of(f)?)?;
    let x0 = vec![0.0; grid.d];
    let t = DiscretizedOperator::sphere_multiplier(grid, phi.n(), |u| {
        phi.value(&x0, u).unwrap_or_else(|_| CMat::scalar(phi.n(), c64::new(f64::NAN, 0.0)))
    })?;
    if let Repr::FourierDiagonal(b) = t.repr()
        && b.iter().any(|m| !m.is_finite())
    {
        return Err(Error::Numerical("sphere function is not finite on the lattice".into()));
    }
    let mf = DiscretizedOperator::multiplication_with(grid, f, scheme)?;
    Ok(t.commutator(&mf)?.with_order_hint(-1.0))
}

/// `[I^α, M_f]` with `I^α` the multiplier `|ξ|^α` (zero at `ξ = 0`).
pub fn frac_commutator_build(
    alpha: f64,
    f: &SpatialFn,
    grid: &GridSpec,
    scheme: MultiplicationScheme,
) -> Result<DiscretizedOperator> {
    check_frac_range(alpha, grid.d)?;
    grid.check_support(support_of(f)?)?;
    let ia = DiscretizedOperator::riesz_potential(grid, alpha);
    let mf = DiscretizedOperator::multiplication_with(grid, f, scheme)?;
    Ok(ia.commutator(&mf)?.with_order_hint(alpha - 1.0))
}

/// `(2π)^{−1} d^{−1/d} (∫_{S^{d−1}} ∫ τ(|Σ_k ∂_kφ(s) D_k f(x)|^d) dx ds)^{1/d}`.
pub fn expected_weyl_cz(phi: &HomogeneousComponent, f: &SpatialFn, d: usize) -> Result<Prediction> {
    if d < 2 || phi.d() != d || f.d() != d {
        return Err(Error::Domain(format!("Calderón–Zygmund prediction needs d ≥ 2 and matching dimensions, got d={d}")));
    }
    let x0 = vec![0.0; d];
    let n = f.n();
    two_levels(PhaseSpaceQuadrature::default(), |qd| {
        let integral = phase_space_integral(f, d, qd, |x, s| {
            let jet = f.jet(x, 1)?;
            let mut b = CMat::zeros(n);
            for k in 0..d {
                let mut e = vec![0u8; d];
                e[k] = 1;
                let dphi = phi.derivative(&x0, s, &e, &vec![0u8; d])?;
                let dk_f = jet.derivative(&e)?.scale(c64::new(0.0, -1.0));
                b.axpy(c64::new(1.0, 0.0), &(&broadcast(dphi, n)? * &dk_f));
            }
            trace_modulus_power(&b, d as f64)
        })?;
        Ok(integral.powf(1.0 / d as f64) / (2.0 * PI * (d as f64).powf(1.0 / d as f64)))
    })
}

/// Admissible `α`: `(−d/2, 0) ∪ (0, 1)` for `d ≥ 2`, `(0, 1)` for `d = 1`.
pub fn check_frac_range(alpha: f64, d: usize) -> Result<()> {
    let ok = match d {
        0 => false,
        1 => alpha > 0.0 && alpha < 1.0,
        _ => (alpha > -(d as f64) / 2.0 && alpha < 0.0) || (alpha > 0.0 && alpha < 1.0),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "fractional commutator needs α ∈ (−d/2, 0) ∪ (0, 1) for d ≥ 2 or α ∈ (0, 1) for d = 1; got α={alpha}, d={d}"
        )))
    }
}

/// `C_{d,α} (∫_{S^{d−1}} ∫ τ(|s·∇f(x)|^{d/(1−α)}) dx ds)^{(1−α)/d}` with
/// `C_{d,α} = |α| d^{(α−1)/d} (2π)^{α−1}`.
pub fn expected_weyl_frac(alpha: f64, f: &SpatialFn, d: usize) -> Result<Prediction> {
    check_frac_range(alpha, d)?;
    if f.d() != d {
        return Err(Error::Dimension(format!("function has d={}, expected {d}", f.d())));
    }
    let q = d as f64 / (1.0 - alpha);
    let c = alpha.abs() * (d as f64).powf((alpha - 1.0) / d as f64) * (2.0 * PI).powf(alpha - 1.0);
    let n = f.n();
    two_levels(PhaseSpaceQuadrature::default(), |qd| {
        let integral = phase_space_integral(f, d, qd, |x, s| {
            let jet = f.jet(x, 1)?;
            let mut b = CMat::zeros(n);
            for (k, sk) in s.iter().enumerate() {
                let mut e = vec![0u8; d];
                e[k] = 1;
                b.axpy(c64::new(*sk, 0.0), &jet.derivative(&e)?);
            }
            trace_modulus_power(&b, q)
        })?;
        Ok(c * integral.powf(1.0 / q))
    })
}

/// Distribution of the couplings `ε_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingLaw {
    Rademacher,
    Uniform,
    /// `ε ≡ 0`
    Deterministic,
}

/// `V(x, ε) = a Σ_n V₀(x − n) ε_n` over the unit lattice translates of the torus.
#[derive(Clone, Debug)]
pub struct RandomModel {
    grid: GridSpec,
    profile: SpatialFn,
    law: CouplingLaw,
    amplitude: f64,
    samples: usize,
    seed: u64,
    cells: usize,
    /// grid contributions `(point, V₀(x_p − n))` of the cell at the origin
    template: Vec<(usize, f64)>,
}

impl RandomModel {
    pub fn new(
        grid: &GridSpec,
        profile: &SpatialFn,
        law: CouplingLaw,
        amplitude: f64,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Config("sample count must be positive".into()));
        }
        let cells = grid.l.round() as usize;
        if (grid.l - cells as f64).abs() > 1e-12 || cells == 0 || grid.npts % cells != 0 {
            return Err(Error::Config(format!(
                "torus side {} must be an integer dividing the {} points per axis",
                grid.l, grid.npts
            )));
        }
        if profile.d() != grid.d || profile.n() != 1 {
            return Err(Error::Dimension("profile must be scalar in the grid dimension".into()));
        }
        let template = (0..grid.num_points())
            .filter_map(|p| {
                let x: Vec<f64> = grid.point(p).iter().map(|v| wrap(*v, grid.l)).collect();
                let v = profile.scalar_value(&x).re;
                (v != 0.0).then_some((p, v))
            })
            .collect();
        Ok(Self { grid: grid.clone(), profile: profile.clone(), law, amplitude, samples, seed, cells, template })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn profile(&self) -> &SpatialFn {
        &self.profile
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn law(&self) -> CouplingLaw {
        self.law
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn num_cells(&self) -> usize {
        self.cells.pow(self.grid.d as u32)
    }

    /// Couplings of sample `index`: ChaCha8 seeded by `seed`, stream `index`.
    pub fn couplings(&self, index: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        (0..self.num_cells())
            .map(|_| match self.law {
                CouplingLaw::Rademacher => {
                    if rng.r#gen::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
                CouplingLaw::Uniform => rng.gen_range(-1.0..=1.0),
                CouplingLaw::Deterministic => 0.0,
            })
            .collect()
    }

    /// Potential on the grid for couplings `eps` (cell `n` in row-major order
    /// of `{0, …, L−1}^d`).
    pub fn potential(&self, eps: &[f64]) -> Result<Vec<f64>> {
        if eps.len() != self.num_cells() {
            return Err(Error::Dimension(format!("{} couplings for {} cells", eps.len(), self.num_cells())));
        }
        let (d, npts, per) = (self.grid.d, self.grid.npts, self.grid.npts / self.cells);
        let mut v = vec![0.0; self.grid.num_points()];
        for (cell, e) in eps.iter().enumerate() {
            if *e == 0.0 {
                continue;
            }
            // shift of cell `n` in grid steps, per axis
            let mut shift = vec![0usize; d];
            let mut rem = cell;
            for a in (0..d).rev() {
                shift[a] = (rem % self.cells) * per;
                rem /= self.cells;
            }
            for &(p, val) in &self.template {
                let mut q = 0usize;
                let mut prem = p;
                let mut idx = vec![0usize; d];
                for a in (0..d).rev() {
                    idx[a] = prem % npts;
                    prem /= npts;
                }
                for a in 0..d {
                    q = q * npts + (idx[a] + shift[a]) % npts;
                }
                v[q] += self.amplitude * e * val;
            }
        }
        Ok(v)
    }
}

/// Representative of `v` in `[−L/2, L/2)`.
fn wrap(v: f64, l: f64) -> f64 {
    (v + 0.5 * l).rem_euclid(l) - 0.5 * l
}

/// Coupling sequence shifted by `k` cells: `(shift_k ε)_n = ε_{n+k}`.
pub fn shift_couplings(eps: &[f64], cells: usize, d: usize, k: &[i64]) -> Vec<f64> {
    let total = cells.pow(d as u32);
    (0..total)
        .map(|n| {
            let mut rem = n;
            let mut idx = vec![0usize; d];
            for a in (0..d).rev() {
                idx[a] = rem % cells;
                rem /= cells;
            }
            let mut q = 0usize;
            for a in 0..d {
                q = q * cells + (idx[a] as i64 + k[a]).rem_euclid(cells as i64) as usize;
            }
            eps[q]
        })
        .collect()
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DosPoint {
    pub lambda: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DosEstimate {
    pub points: Vec<DosPoint>,
    pub samples_used: usize,
    pub skipped: Vec<(usize, String)>,
}

/// Monte-Carlo estimate of `N(λ) = L^{−d} E[#{eigenvalues ≤ λ}]`.
pub fn dos_estimate(
    model: &RandomModel,
    builder: &(dyn Fn(&[f64]) -> Result<DiscretizedOperator> + Sync),
    lambdas: &[f64],
) -> Result<DosEstimate> {
    let vol = model.grid().volume();
    let per_sample: Vec<std::result::Result<Vec<f64>, String>> = (0..model.samples())
        .into_par_iter()
        .map(|s| {
            let run = || -> Result<Vec<f64>> {
                let v = model.potential(&model.couplings(s))?;
                let op = builder(&v)?;
                let w = op.trace_weights().first().copied().unwrap_or(1.0);
                let eig = match op.repr() {
                    Repr::Dense(m) => linalg::hermitian_eigenvalues(m.as_ref())?,
                    _ => linalg::hermitian_eigenvalues(op.to_dense().as_ref())?,
                };
                Ok(lambdas.iter().map(|l| eig.partition_point(|e| *e <= *l) as f64 * w / vol).collect())
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut skipped = Vec::new();
    let mut rows = Vec::new();
    for (s, r) in per_sample.into_iter().enumerate() {
        match r {
            Ok(v) => rows.push(v),
            Err(msg) => skipped.push((s, msg)),
        }
    }
    if skipped.len() * 10 > model.samples() {
        return Err(Error::Numerical(format!(
            "{} of {} samples failed; first: {}",
            skipped.len(),
            model.samples(),
            skipped[0].1
        )));
    }
    let k = rows.len() as f64;
    let points = lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mean = rows.iter().map(|r| r[i]).sum::<f64>() / k;
            let var = if rows.len() > 1 {
                rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            DosPoint { lambda: *l, mean, stderr: (var / k).sqrt() }
        })
        .collect();
    Ok(DosEstimate { points, samples_used: rows.len(), skipped })
}

/// `λ^{d/m} (1/(d(2π)^d)) Σ_r w_r ∫_{S^{d−1}} ∫_{[0,1]^d} τ(σ_r,m(x,u)^{−d/m}) dx du`
/// for weighted realizations `(σ_r, w_r)` of the principal symbol.
pub fn dos_prediction_expected(realizations: &[(ClassicalSymbol, f64)], lambda: f64) -> Result<f64> {
    let first = &realizations.first().ok_or_else(|| Error::Config("no symbol realizations".into()))?.0;
    let m = first.order();
    if m.im != 0.0 || m.re <= 0.0 {
        return Err(Error::Domain(format!("density of states needs real positive order, got {m}")));
    }
    if lambda <= 0.0 {
        return Ok(0.0);
    }
    let (m, d) = (m.re, first.d());
    let cell = BoxDomain::new(vec![0.0; d], vec![1.0; d]);
    let sphere = SphereRule::new(d, 64)?;
    let q = c64::new(-(d as f64) / m, 0.0);
    let mut total = 0.0;
    for (sym, weight) in realizations {
        if sym.order() != first.order() || sym.d() != d {
            return Err(Error::Dimension("realizations must share order and dimension".into()));
        }
        let principal = sym.principal();
        let space = if sym.is_x_independent() { BoxRule::new(&cell, 1, 1) } else { BoxRule::new(&cell, 4, 8) };
        for (x, wx) in space.points.iter().zip(&space.weights) {
            for (u, wu) in sphere.points.iter().zip(&sphere.weights) {
                total += weight * wx * wu * matrix_power(&principal.value(x, u)?, q)?.trace().re;
            }
        }
    }
    Ok(lambda.powf(d as f64 / m) * total / (d as f64 * (2.0 * PI).powi(d as i32)))
}

pub fn dos_prediction(sym: &ClassicalSymbol, lambda: f64) -> Result<f64> {
    dos_prediction_expected(&[(sym.clone(), 1.0)], lambda)
}

pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Quasi-periodic potential `a Σ_j [cos(2π x_j) + cos(2π α x_j)]`, the
/// restriction of a function on the 2-torus to the line `(x, αx)`.
pub fn quasi_periodic_potential(d: usize, alpha: f64, amplitude: f64) -> SpatialFn {
    let mut out = SpatialFn::scalar_constant(d, 0.0);
    for j in 0..d {
        let mut k1 = vec![0.0; d];
        k1[j] = 2.0 * PI;
        let mut k2 = vec![0.0; d];
        k2[j] = 2.0 * PI * alpha;
        out = out
            .sum(&SpatialFn::cosine(d, 0.0, amplitude, k1, 0.0))
            .sum(&SpatialFn::cosine(d, 0.0, amplitude, k2, 0.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::families;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn bessel_weyl_constant() {
        let chi = SpatialFn::bump(vec![0.0], 1.0).with_mass(1.0).unwrap();
        let sym = families::abs_xi_symbol(1, -1.0);
        let p = expected_weyl(&sym, &chi, 1.0, 1).unwrap();
        assert!((p.value - 1.0 / PI).abs() < 1e-6, "{}", p.value);
        assert!(!p.precision_warning);
        let doubled = ClassicalSymbol::homogeneous(families::abs_xi_power(1, c(-1.0)).scaled(c(2.5)));
        assert!((expected_weyl(&doubled, &chi, 1.0, 1).unwrap().value - 2.5 / PI).abs() < 1e-6);
        let zero = chi.scaled(c(0.0));
        assert_eq!(expected_weyl(&sym, &zero, 1.0, 1).unwrap().value, 0.0);
    }

    #[test]
    fn dos_golden_constant() {
        // d = 1, m = 2: the lattice count #{k : (2πk/L)² ≤ λ}/L tends to √λ/π
        let sym = families::abs_xi_symbol(1, 2.0);
        for lam in [1.0, 9.0, 100.0] {
            assert!((dos_prediction(&sym, lam).unwrap() - lam.sqrt() / PI).abs() < 1e-12);
        }
        let l = 4096.0;
        let lam: f64 = 50.0;
        let kmax = (lam.sqrt() * l / (2.0 * PI)).floor();
        let count = (2.0 * kmax + 1.0) / l;
        assert!((count - lam.sqrt() / PI).abs() / (lam.sqrt() / PI) < 1e-3);
        assert_eq!(dos_prediction(&sym, 0.0).unwrap(), 0.0);
        let sym2 = families::abs_xi_symbol(2, 2.0);
        assert!((dos_prediction(&sym2, 3.0).unwrap() - 3.0 * 2.0 * PI / (2.0 * 4.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn frac_range_and_constants() {
        assert!(check_frac_range(-1.5, 2).is_err());
        assert!(check_frac_range(-0.5, 2).is_ok());
        assert!(check_frac_range(-0.5, 1).is_err());
        let f = SpatialFn::scalar_constant(1, 2.0).product(&SpatialFn::bump(vec![0.0], 1.0));
        let flat = SpatialFn::new(1, 1, Some(BoxDomain::cube(1, 1.0)), "one", |v| {
            Ok(crate::jet::MatJet::scalar_constant(v[0].nv(), v[0].order(), 1, c(1.0)))
        });
        assert_eq!(expected_weyl_frac(0.5, &flat, 1).unwrap().value, 0.0);
        let p = expected_weyl_frac(0.5, &f, 1).unwrap();
        assert!(p.refinement_gap < 5e-3);
    }

    #[test]
    fn cz_riesz_specialization() {
        // ∂_{s_k}(s_1/|s|) = δ_{1k} − s_1 s_k on the unit circle
        let phi = families::riesz_angle(2, 0);
        for t in [0.3f64, 1.1, 2.9] {
            let s = [t.cos(), t.sin()];
            for k in 0..2 {
                let mut e = vec![0u8; 2];
                e[k] = 1;
                let v = phi.derivative(&[0.0, 0.0], &s, &e, &[0, 0]).unwrap()[(0, 0)].re;
                let expect = if k == 0 { 1.0 } else { 0.0 } - s[0] * s[k];
                assert!((v - expect).abs() < 1e-12);
            }
        }
        let f = SpatialFn::gaussian(vec![0.0, 0.0], 0.5).product(&SpatialFn::bump(vec![0.0, 0.0], 2.0));
        let p = expected_weyl_cz(&phi, &f, 2).unwrap();
        assert!(p.value > 0.0 && p.refinement_gap < 5e-3, "{p:?}");
    }

    #[test]
    fn random_potential_equivariance() {
        let g = GridSpec::new(1, 8.0, 64).unwrap();
        let model = RandomModel::new(&g, &SpatialFn::bump(vec![0.0], 0.45), CouplingLaw::Rademacher, 1.0, 4, 7).unwrap();
        let eps = model.couplings(2);
        let v = model.potential(&eps).unwrap();
        let k = 3i64;
        let shifted = model.potential(&shift_couplings(&eps, 8, 1, &[k])).unwrap();
        // V(x + k) = V(x, shift_k ε): grid step is 1/8, so x + k is index p + 8k
        for p in 0..64 {
            assert_eq!(v[(p + 8 * k as usize) % 64], shifted[p]);
        }
        assert_eq!(model.couplings(2), eps);
        assert_ne!(model.couplings(3), eps);
    }

    #[test]
    fn deterministic_dos_matches_free_count() {
        let g = GridSpec::new(1, 8.0, 64).unwrap();
        let model =
            RandomModel::new(&g, &SpatialFn::bump(vec![0.0], 0.45), CouplingLaw::Deterministic, 1.0, 3, 1).unwrap();
        let builder = |v: &[f64]| {
            let j2 = DiscretizedOperator::bessel_potential(&g, -2.0);
            let mv = DiscretizedOperator::multiplication_fn(&g, 1, |x| {
                let _ = x;
                CMat::zeros(1)
            })?;
            assert!(v.iter().all(|t| *t == 0.0));
            j2.add(&mv)
        };
        let lams = [0.5, 2.0, 30.0];
        let est = dos_estimate(&model, &builder, &lams).unwrap();
        for (pt, l) in est.points.iter().zip(lams) {
            let free = g.frequencies().iter().filter(|k| 1.0 + k[0] * k[0] <= l).count() as f64 / 8.0;
            assert_eq!(pt.mean, free);
            assert_eq!(pt.stderr, 0.0);
        }
        assert_eq!(est.points[0].mean, 0.0);
        assert!(RandomModel::new(&g, &SpatialFn::bump(vec![0.0], 0.45), CouplingLaw::Uniform, 1.0, 0, 1).is_err());
    }
}

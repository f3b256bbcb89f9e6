//! Localized zeta functions of symbols and discretized operators, and the
//! residue at the right-most pole `z = d/m`.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::linalg;
use crate::powers::matrix_power;
use crate::quadrature::{BoxRule, SphereRule, uniform_composite};
use crate::quantize::{DiscretizedOperator, Repr};
use crate::spatial::SpatialFn;
use crate::symbols::{ClassicalSymbol, cutoff_psi};
use num_complex::Complex64 as c64;
use std::f64::consts::PI;

/// Sample points of a zeta function to the right of its pole.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ZetaSample {
    pub z_values: Vec<c64>,
    pub values: Vec<c64>,
    pub pole: f64,
}

impl ZetaSample {
    pub fn new(z_values: Vec<c64>, values: Vec<c64>, pole: f64) -> Result<Self> {
        if z_values.len() != values.len() {
            return Err(Error::Dimension(format!("{} z values for {} samples", z_values.len(), values.len())));
        }
        if let Some(z) = z_values.iter().find(|z| !(z.re > pole + 1e-3)) {
            return Err(Error::Range(format!("sample z = {z} is not right of the pole {pole} by 1e−3")));
        }
        Ok(Self { z_values, values, pole })
    }

    /// Evaluates `f` at `count` equispaced real points in `(pole + lo, pole + hi]`.
    pub fn tabulate(pole: f64, lo: f64, hi: f64, count: usize, mut f: impl FnMut(c64) -> Result<c64>) -> Result<Self> {
        let zs: Vec<c64> = (0..count)
            .map(|i| c64::new(pole + lo + (hi - lo) * i as f64 / (count.max(2) - 1) as f64, 0.0))
            .collect();
        let values = zs.iter().map(|z| f(*z)).collect::<Result<Vec<_>>>()?;
        Self::new(zs, values, pole)
    }

    /// CSV rows `(Re z, Im z, Re ζ, Im ζ)`.
    pub fn csv_rows(&self) -> Vec<[f64; 4]> {
        self.z_values.iter().zip(&self.values).map(|(z, v)| [z.re, z.im, v.re, v.im]).collect()
    }
}

/// Quadrature resolution for the symbolic zeta integrals.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ZetaQuadrature {
    pub space_panels: usize,
    pub sphere_resolution: usize,
    pub radial_panels: usize,
}

impl Default for ZetaQuadrature {
    fn default() -> Self {
        Self { space_panels: 8, sphere_resolution: 64, radial_panels: 8 }
    }
}

impl ZetaQuadrature {
    pub fn refined(&self) -> Self {
        Self {
            space_panels: 2 * self.space_panels,
            sphere_resolution: 2 * self.sphere_resolution,
            radial_panels: 2 * self.radial_panels,
        }
    }
}

fn real_order(sym: &ClassicalSymbol) -> Result<f64> {
    let m = sym.order();
    if m.im != 0.0 || m.re <= 0.0 {
        return Err(Error::Domain(format!("zeta functions need real positive order, got {m}")));
    }
    Ok(m.re)
}

/// `φ(x)` as an `n×n` matrix, broadcasting scalar localizers.
fn localizer_value(phi: &SpatialFn, x: &[f64], n: usize) -> Result<CMat> {
    let v = phi.eval(x);
    match v.n() {
        k if k == n => Ok(v),
        1 => Ok(CMat::scalar(n, v[(0, 0)])),
        k => Err(Error::Dimension(format!("localizer is {k}x{k}, symbol is {n}x{n}"))),
    }
}

/// `∫_x ∫_{S^{d−1}} τ(φ* σ_m(x,u)^{−z} φ) du dx`.
fn angular_space_integral(sym: &ClassicalSymbol, phi: &SpatialFn, z: c64, quad: &ZetaQuadrature) -> Result<c64> {
    let d = sym.d();
    let n = sym.n();
    if phi.d() != d {
        return Err(Error::Dimension(format!("localizer has d={}, symbol has d={d}", phi.d())));
    }
    let support = phi
        .support()
        .ok_or_else(|| Error::Domain(format!("localizer {} has no compact support box", phi.label())))?;
    let space = BoxRule::new(support, quad.space_panels, 8);
    let sphere = SphereRule::new(d, quad.sphere_resolution)?;
    let principal = sym.principal();
    let cached: Option<Vec<CMat>> = if sym.is_x_independent() {
        let x0 = vec![0.0; d];
        Some(
            sphere
                .points
                .iter()
                .map(|u| matrix_power(&principal.value(&x0, u)?, -z))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let mut acc = c64::new(0.0, 0.0);
    for (x, wx) in space.points.iter().zip(&space.weights) {
        let f = localizer_value(phi, x, n)?;
        if f.norm_max() == 0.0 {
            continue;
        }
        let fa = f.adjoint();
        for (k, (u, wu)) in sphere.points.iter().zip(&sphere.weights).enumerate() {
            let p = match &cached {
                Some(c) => c[k].clone(),
                None => matrix_power(&principal.value(x, u)?, -z)?,
            };
            acc += (&(&fa * &p) * &f).trace() * (wx * wu);
        }
    }
    Ok(acc)
}

/// `∫_{1/2}^{∞} ψ(r) r^{d−1−mz} dr`: exact on `[1, ∞)`, Gauss on the cutoff ramp.
fn radial_factor(m: f64, d: usize, z: c64, panels: usize) -> c64 {
    let e = c64::new(d as f64 - 1.0, 0.0) - z * m;
    let tail = -1.0 / (e + 1.0);
    let (r, w) = uniform_composite(0.5, 1.0, panels, 16);
    let ramp: c64 = r.iter().zip(&w).map(|(r, w)| c64::new(*r, 0.0).powc(e) * (cutoff_psi(*r) * w)).sum();
    tail + ramp
}

/// `ζ_{σ,φ}(z) = (2π)^{−d} ∫∫ τ(φ* (ψσ_m)^{−z} φ) dx dξ` for `Re z > d/m`.
pub fn symbolic_zeta(sym: &ClassicalSymbol, phi: &SpatialFn, z: c64) -> Result<c64> {
    symbolic_zeta_with(sym, phi, z, &ZetaQuadrature::default())
}

pub fn symbolic_zeta_with(sym: &ClassicalSymbol, phi: &SpatialFn, z: c64, quad: &ZetaQuadrature) -> Result<c64> {
    let m = real_order(sym)?;
    let d = sym.d();
    let pole = d as f64 / m;
    if z.re <= pole {
        return Err(Error::Domain(format!("symbolic zeta needs Re z > {pole}, got {z}")));
    }
    let ang = angular_space_integral(sym, phi, z, quad)?;
    Ok(ang * radial_factor(m, d, z, quad.radial_panels) / (2.0 * PI).powi(d as i32))
}

/// `(1/(m(2π)^d)) ∫_{S^{d−1}} ∫ τ(φ* σ_m^{−d/m} φ) dx du`.
pub fn residue_at_pole(sym: &ClassicalSymbol, phi: &SpatialFn) -> Result<c64> {
    residue_at_pole_with(sym, phi, &ZetaQuadrature::default())
}

pub fn residue_at_pole_with(sym: &ClassicalSymbol, phi: &SpatialFn, quad: &ZetaQuadrature) -> Result<c64> {
    let m = real_order(sym)?;
    let d = sym.d();
    let ang = angular_space_integral(sym, phi, c64::new(d as f64 / m, 0.0), quad)?;
    Ok(ang / (m * (2.0 * PI).powi(d as i32)))
}

/// Positive spectrum of `A` with the localized weights `c_i`, so that
/// `ζ_{A,φ}(z) = Σ_i c_i λ_i^{−z}`.
#[derive(Clone, Debug)]
pub struct OperatorZeta {
    pairs: Vec<(f64, f64)>,
    pole: Option<f64>,
}

impl OperatorZeta {
    pub fn new(a: &DiscretizedOperator, phi: &SpatialFn) -> Result<Self> {
        let grid = a.grid();
        let n = a.n();
        let np = grid.num_points();
        let w = a.trace_weights();
        let locs: Vec<CMat> = grid.points().iter().map(|x| localizer_value(phi, x, n)).collect::<Result<_>>()?;
        let weight_block = |p: usize| CMat::from_real_diag(&w[p * n..(p + 1) * n]);
        let mut pairs = Vec::new();
        let positive = |v: f64, top: f64| v > 0.0 && v >= 1e-14 * top;
        match a.repr() {
            Repr::FourierDiagonal(blocks) => {
                // c = u* G u / N^d with G = Σ_p φ_p W_p φ_p*
                let mut g = CMat::zeros(n);
                for (p, f) in locs.iter().enumerate() {
                    g.axpy(c64::new(1.0, 0.0), &(&(f * &weight_block(p)) * &f.adjoint()));
                }
                for b in blocks {
                    let (vals, u) = b.hermitian_eigen()?;
                    for (j, v) in vals.iter().enumerate() {
                        let col: Vec<c64> = (0..n).map(|i| u[(i, j)]).collect();
                        let mut q = c64::new(0.0, 0.0);
                        for i in 0..n {
                            for k in 0..n {
                                q += col[i].conj() * g[(i, k)] * col[k];
                            }
                        }
                        pairs.push((*v, q.re / np as f64));
                    }
                }
            }
            Repr::Multiplication(blocks) => {
                for (p, (b, f)) in blocks.iter().zip(&locs).enumerate() {
                    let (vals, u) = b.hermitian_eigen()?;
                    let h = &(&f.adjoint() * &u);
                    let wb = weight_block(p);
                    for (j, v) in vals.iter().enumerate() {
                        let c: f64 = (0..n).map(|a| h[(a, j)].norm_sqr() * wb[(a, a)].re).sum();
                        pairs.push((*v, c));
                    }
                }
            }
            Repr::Dense(m) => {
                if !a.is_hermitian_flagged() && !linalg::is_hermitian(m.as_ref(), 1e-10) {
                    return Err(Error::Domain("operator zeta needs a Hermitian operator".into()));
                }
                let (vals, v) = linalg::hermitian_eigen(m.as_ref())?;
                let loc_adj = DiscretizedOperator::multiplication_fn(grid, n, |x| {
                    localizer_value(phi, x, n).map(|f| f.adjoint()).unwrap_or_else(|_| CMat::zeros(n))
                })?;
                let c = loc_adj.apply_to_columns(&v)?;
                for (i, val) in vals.iter().enumerate() {
                    let weight: f64 = (0..c.nrows()).map(|r| c[(r, i)].norm_sqr() * w[r]).sum();
                    pairs.push((*val, weight));
                }
            }
        }
        let top = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
        if let Some(bad) = pairs.iter().find(|p| !positive(p.0, top)) {
            return Err(Error::Domain(format!("operator is not positive definite (eigenvalue {:.3e})", bad.0)));
        }
        let order = a.order_hint();
        let pole = (order > 0.0).then(|| grid.d as f64 / order);
        Ok(Self { pairs, pole })
    }

    pub fn spectrum(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn value(&self, z: c64) -> Result<c64> {
        if let Some(p) = self.pole
            && z.re <= p
        {
            return Err(Error::Domain(format!("operator zeta needs Re z > {p}, got {z}")));
        }
        Ok(self.pairs.iter().map(|(l, c)| (-z * l.ln()).exp() * *c).sum())
    }
}

/// `ζ_{A,φ}(z) = Tr(M_{φ*} A^{−z} M_φ)`.
pub fn operator_zeta(a: &DiscretizedOperator, phi: &SpatialFn, z: c64) -> Result<c64> {
    OperatorZeta::new(a, phi)?.value(z)
}

/// Resolved fraction of the pole part for a box frequency band `‖ξ‖_∞ ≤ K`:
/// `1 − mean_u (K/‖u‖_∞)^{−m(z−p)}`.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct BandCorrection {
    pub ceiling: f64,
    pub m: f64,
    pub d: usize,
}

impl BandCorrection {
    pub fn resolved_fraction(&self, z: f64) -> Result<f64> {
        let p = self.d as f64 / self.m;
        let sphere = SphereRule::new(self.d, 512)?;
        let total = sphere.measure();
        let missing: f64 = sphere
            .points
            .iter()
            .zip(&sphere.weights)
            .map(|(u, w)| {
                let inf = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                (self.ceiling / inf).powf(-self.m * (z - p)) * w
            })
            .sum::<f64>()
            / total;
        Ok(1.0 - missing)
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ResidueFit {
    pub residue: c64,
    /// RMS misfit relative to the largest `|g|`
    pub residual: f64,
    pub condition: f64,
    pub degree: usize,
}

/// Fits `(z − p) ζ(z) = R·f(z) + (z − p)·h(z)` with `f` the resolved pole
/// fraction of the band (1 without one) and `h` a polynomial; returns `R`.
pub fn extrapolate_residue(samples: &ZetaSample, band: Option<&BandCorrection>) -> Result<ResidueFit> {
    let p = samples.pole;
    let count = samples.z_values.len();
    if count < 4 {
        return Err(Error::Range(format!("need at least 4 samples, got {count}")));
    }
    if let Some(z) = samples.z_values.iter().find(|z| z.im != 0.0 || !(z.re > p + 1e-3 && z.re <= p + 0.5 + 1e-12)) {
        return Err(Error::Range(format!("sample z = {z} must be real in (p + 1e−3, p + 0.5]")));
    }
    let mut g = Vec::with_capacity(count);
    let mut design = Vec::with_capacity(count);
    let degree = 3.min(count - 2);
    for (z, v) in samples.z_values.iter().zip(&samples.values) {
        let u = z.re - p;
        g.push(*v * u);
        let f = match band {
            Some(b) => b.resolved_fraction(z.re)?,
            None => 1.0,
        };
        let mut row = vec![f];
        row.extend((1..=degree).map(|k| (u / 0.5).powi(k as i32)));
        design.push(row);
    }
    let re: Vec<f64> = g.iter().map(|v| v.re).collect();
    let im: Vec<f64> = g.iter().map(|v| v.im).collect();
    let (cr, cond) = linalg::lstsq_real(&design, &re)?;
    let (ci, _) = linalg::lstsq_real(&design, &im)?;
    if cond > 1e10 {
        return Err(Error::Fit(format!("residue fit is ill-conditioned (condition {cond:.3e})")));
    }
    let scale = g.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut ss = 0.0;
    for (row, v) in design.iter().zip(&g) {
        let fr: f64 = row.iter().zip(&cr).map(|(a, b)| a * b).sum();
        let fi: f64 = row.iter().zip(&ci).map(|(a, b)| a * b).sum();
        ss += (c64::new(fr, fi) - v).norm_sqr();
    }
    Ok(ResidueFit {
        residue: c64::new(cr[0], ci[0]),
        residual: (ss / count as f64).sqrt() / scale,
        condition: cond,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::GridSpec;
    use crate::symbols::families;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn residue_examples() {
        let sym = families::abs_xi_symbol(2, 2.0);
        let phi = SpatialFn::bump(vec![0.0, 0.0], 1.0);
        let mass = phi.integral_of(|m| c64::new(m[(0, 0)].norm_sqr(), 0.0), 16).unwrap().re;
        let phi = phi.scaled(c(mass.powf(-0.5)));
        let r = residue_at_pole(&sym, &phi).unwrap();
        assert!((r.re - 1.0 / (4.0 * PI)).abs() < 1e-6, "{r}");
        let diag = families::abs_xi_power(2, c(2.0)).left_mul_matrix(&CMat::from_real_diag(&[1.0, 16.0]));
        let r2 = residue_at_pole(&ClassicalSymbol::homogeneous(diag), &phi).unwrap();
        assert!((r2.re - 17.0 / (64.0 * PI)).abs() < 1e-6, "{r2}");
        let zero = phi.scaled(c(0.0));
        assert_eq!(residue_at_pole(&sym, &zero).unwrap(), c(0.0));
        assert_eq!(symbolic_zeta(&sym, &zero, c(1.3)).unwrap(), c(0.0));
    }

    #[test]
    fn symbolic_zeta_scaling_and_pole() {
        let phi = SpatialFn::bump(vec![0.0, 0.0], 1.0);
        let sym = families::abs_xi_symbol(2, 2.0);
        let scaled = ClassicalSymbol::homogeneous(families::abs_xi_power(2, c(2.0)).scaled(c(3.0)));
        let z = c(1.4);
        let a = symbolic_zeta(&sym, &phi, z).unwrap();
        let b = symbolic_zeta(&scaled, &phi, z).unwrap();
        assert!((b - a * 3f64.powf(-1.4)).norm() < 1e-12 * a.norm());
        assert!(matches!(symbolic_zeta(&sym, &phi, c(1.0)), Err(Error::Domain(_))));
        let s = ZetaSample::tabulate(1.0, 0.05, 0.5, 8, |z| symbolic_zeta(&sym, &phi, z)).unwrap();
        let fit = extrapolate_residue(&s, None).unwrap();
        let r = residue_at_pole(&sym, &phi).unwrap();
        assert!((fit.residue - r).norm() < 1e-2 * r.norm(), "{} vs {}", fit.residue, r);
        assert!(s.values.iter().all(|v| v.re > 0.0 && v.im.abs() <= 1e-10 * v.norm()));
    }

    #[test]
    fn exact_pole_fits() {
        let s = ZetaSample::tabulate(0.5, 0.05, 0.5, 6, |z| Ok(1.0 / (z - 0.5))).unwrap();
        let fit = extrapolate_residue(&s, None).unwrap();
        assert!((fit.residue - c(1.0)).norm() < 1e-12 && fit.residual < 1e-12);
        let s = ZetaSample::tabulate(0.5, 0.05, 0.5, 6, |z| Ok(1.0 / (z - 0.5) + 7.0)).unwrap();
        assert!((extrapolate_residue(&s, None).unwrap().residue - c(1.0)).norm() < 1e-12);
        let few = ZetaSample::tabulate(0.5, 0.05, 0.5, 3, |z| Ok(1.0 / (z - 0.5))).unwrap();
        assert!(matches!(extrapolate_residue(&few, None), Err(Error::Range(_))));
    }

    #[test]
    fn operator_zeta_identity_and_lattice() {
        let g = GridSpec::new(1, 8.0, 16).unwrap();
        let phi = SpatialFn::bump(vec![0.0], 1.5);
        let id = DiscretizedOperator::identity(&g, 1);
        let w: f64 = g.points().iter().map(|x| phi.eval(x)[(0, 0)].norm_sqr()).sum();
        for z in [0.5, 2.0] {
            assert!((operator_zeta(&id, &phi, c(z)).unwrap() - c(w)).norm() < 1e-12);
        }
        let a = DiscretizedOperator::bessel_potential(&g, -1.0);
        let z = c(1.7);
        let lattice: f64 = g.frequencies().iter().map(|k| (1.0 + k[0] * k[0]).powf(-0.85)).sum::<f64>() / 16.0 * w;
        assert!((operator_zeta(&a, &phi, z).unwrap() - c(lattice)).norm() < 1e-12 * lattice);
        let dense = DiscretizedOperator::from_dense(&g, 1, a.to_dense()).unwrap().mark_hermitian().unwrap();
        assert!((operator_zeta(&dense, &phi, z).unwrap() - c(lattice)).norm() < 1e-10 * lattice);
    }

    #[test]
    fn lattice_zeta_residue_d1() {
        // ⟨ξ⟩ on a long torus: the banded residue matches the symbol residue
        let g = GridSpec::new(1, 64.0, 1024).unwrap();
        let phi = SpatialFn::bump(vec![0.0], 4.0);
        let a = DiscretizedOperator::bessel_potential(&g, -1.0).with_order_hint(1.0);
        let oz = OperatorZeta::new(&a, &phi).unwrap();
        let s = ZetaSample::tabulate(1.0, 0.0625, 0.5, 8, |z| oz.value(z)).unwrap();
        let band = BandCorrection { ceiling: g.nyquist(), m: 1.0, d: 1 };
        let fit = extrapolate_residue(&s, Some(&band)).unwrap();
        let r = residue_at_pole(&families::abs_xi_symbol(1, 1.0), &phi).unwrap();
        assert!((fit.residue - r).norm() < 0.02 * r.norm(), "{} vs {}", fit.residue, r);
    }
}

//! Complex powers: matrix powers, Dunford contour integrals and power symbols.

use crate::cmat::CMat;
use crate::elliptic::inverse_recursion;
use crate::error::{Error, Result};
use crate::jet::MatJet;
use crate::quadrature::composite;
use crate::symbols::{ClassicalSymbol, ComponentJetFn, HomogeneousComponent, JetKind, compose_symbols};
use num_complex::Complex64 as c64;
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_CONTOUR_NODES: usize = 64;

/// `Λ_max` relative to the spectral ceiling.
const RAY_EXTENT: f64 = 1e6;
/// Width of a Gauss–Legendre panel in `log t` on the rays.
const RAY_PANEL_WIDTH: f64 = 1.5;
const PANEL_POINTS: usize = 16;
const TAIL_TERMS: usize = 5;

fn check_positive(p: &CMat) -> Result<(Vec<f64>, CMat)> {
    let scale = p.norm_max();
    let asym = (p - &p.adjoint()).norm_max();
    if asym > 1e-10 * scale.max(1e-300) {
        return Err(Error::Domain(format!("matrix is not Hermitian (asymmetry {asym:.3e})")));
    }
    let (vals, vecs) = p.hermitian_eigen()?;
    let floor = vals.first().copied().unwrap_or(0.0);
    if !(floor >= 1e-12 * scale) || floor <= 0.0 {
        return Err(Error::Domain(format!("matrix is not positive definite (smallest eigenvalue {floor:.3e})")));
    }
    Ok((vals, vecs))
}

/// `P^z` by the spectral calculus of a positive definite Hermitian matrix.
pub fn matrix_power(p: &CMat, z: c64) -> Result<CMat> {
    check_positive(p)?;
    p.hermitian_fn(|v| c64::new(v, 0.0).powc(z))
}

/// Nodes and weights of the contour pieces for given arc radius and ray extent.
struct Contour {
    /// ray nodes `t` and weights for `∫_r^Λ g(t) dt`
    ray: Vec<(f64, f64)>,
    /// arc angles and weights for `∫_{−π}^{π} g(θ) dθ`
    arc: Vec<(f64, f64)>,
    r: f64,
    lam_max: f64,
}

impl Contour {
    fn new(r: f64, lam_max: f64, nodes: usize) -> Self {
        let (a, b) = (r.ln(), lam_max.ln());
        let panels = (((b - a) / RAY_PANEL_WIDTH).ceil() as usize).max(nodes.div_ceil(PANEL_POINTS)).max(1);
        let breaks: Vec<f64> = (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect();
        let (s, w) = composite(&breaks, PANEL_POINTS);
        let ray = s.iter().zip(&w).map(|(&s, &w)| (s.exp(), w * s.exp())).collect();
        let arc_panels = nodes.div_ceil(PANEL_POINTS).max(4);
        let breaks: Vec<f64> = (0..=arc_panels).map(|k| -PI + 2.0 * PI * k as f64 / arc_panels as f64).collect();
        let (t, w) = composite(&breaks, PANEL_POINTS);
        let arc = t.into_iter().zip(w).collect();
        Self { ray, arc, r, lam_max }
    }

    /// `(i/2π)∫_Γ λ^z b(λ) dλ` with the rays folded into one real integral.
    fn integrate<T>(&self, z: c64, mut b: impl FnMut(c64) -> Result<T>, mut axpy: impl FnMut(&mut Option<T>, c64, T)) -> Result<Option<T>> {
        let mut acc: Option<T> = None;
        let sinc = -(PI * z).sin() / PI;
        for &(t, w) in &self.ray {
            let f = b(c64::new(-t, 0.0))?;
            axpy(&mut acc, sinc * c64::new(t, 0.0).powc(z) * w, f);
        }
        let zp1 = z + 1.0;
        for &(th, w) in &self.arc {
            let lam = c64::from_polar(self.r, th);
            let f = b(lam)?;
            let coeff = c64::new(self.r, 0.0).powc(zp1) * (c64::new(0.0, th) * zp1).exp() * (w / (2.0 * PI));
            axpy(&mut acc, coeff, f);
        }
        Ok(acc)
    }

    /// Coefficients of `(−F)^k` in the analytic ray tail beyond `Λ_max`.
    fn tail_coefficients(&self, z: c64) -> Vec<c64> {
        let sinc = -(PI * z).sin() / PI;
        (0..TAIL_TERMS).map(|k| sinc * c64::new(self.lam_max, 0.0).powc(z - k as f64) / (k as f64 - z)).collect()
    }
}

/// `P^z` for `Re z < 0` by quadrature of the Dunford integral over the keyhole
/// contour; an independent oracle for [`matrix_power`].
pub fn contour_power(p: &CMat, z: c64, nodes: usize) -> Result<CMat> {
    if z.re >= 0.0 {
        return Err(Error::Domain(format!("contour_power needs Re z < 0, got {z}")));
    }
    if nodes < 64 {
        return Err(Error::Config(format!("contour_power needs at least 64 nodes, got {nodes}")));
    }
    let asym = (p - &p.adjoint()).norm_max();
    if asym > 1e-10 * p.norm_max().max(1e-300) {
        return Err(Error::Domain(format!("matrix is not Hermitian (asymmetry {asym:.3e})")));
    }
    let sv = p.singular_values();
    let ceiling = sv.iter().copied().fold(0.0, f64::max);
    let floor = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(floor > 1e-12 * ceiling) {
        return Err(Error::Domain(format!("matrix is not positive definite (smallest singular value {floor:.3e})")));
    }
    let n = p.n();
    let contour = Contour::new(0.5 * floor, RAY_EXTENT * ceiling, nodes);
    let resolvent = |lam: c64| {
        (p - &CMat::scalar(n, lam)).inverse().map_err(|_| Error::SingularResolvent { location: format!("λ={lam}") })
    };
    let mut out = contour
        .integrate(z, resolvent, |acc: &mut Option<CMat>, c, f| match acc {
            Some(a) => a.axpy(c, &f),
            None => *acc = Some(f.scale(c)),
        })?
        .unwrap_or_else(|| CMat::zeros(n));
    let minus_p = p.scale_real(-1.0);
    let mut power = CMat::identity(n);
    for c in contour.tail_coefficients(z) {
        out.axpy(c, &power);
        power = &power * &minus_p;
    }
    Ok(out)
}

/// Symbol of `A^z` for an elliptic symbol with positive principal part.
#[derive(Clone, Debug)]
pub struct PowerSymbol {
    pub exponent: c64,
    pub base: ClassicalSymbol,
    pub symbol: ClassicalSymbol,
}

impl PowerSymbol {
    pub fn components(&self) -> &[HomogeneousComponent] {
        self.symbol.components()
    }

    pub fn truncation(&self) -> usize {
        self.symbol.truncation()
    }
}

fn point_spectrum(sym: &ClassicalSymbol, x: &[f64], xi: &[f64]) -> Result<(f64, f64)> {
    let s = sym.principal().value(x, xi)?;
    if !s.is_hermitian(1e-10) {
        return Err(Error::Domain(format!("principal symbol is not Hermitian at x={x:?}, ξ={xi:?}")));
    }
    let (ev, _) = s.hermitian_eigen()?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::Domain(format!("principal symbol is not positive at x={x:?}, ξ={xi:?}")));
    }
    Ok((lo, hi))
}

/// Jets of the first `jmax + 1` components of `B^{(z)}` at `(x, ξ)`, `Re z < 0`.
pub fn contour_power_jets(
    sym: &ClassicalSymbol,
    z: c64,
    x: &[f64],
    xi: &[f64],
    order: usize,
    jmax: usize,
    nodes: usize,
) -> Result<Vec<MatJet>> {
    let (lo, hi) = point_spectrum(sym, x, xi)?;
    let contour = Contour::new(0.5 * lo, RAY_EXTENT * hi, nodes);
    let acc = contour.integrate(
        z,
        |lam| {
            let terms = inverse_recursion(sym, x, xi, order, jmax, Some(lam))?;
            Ok(terms.into_iter().enumerate().map(|(k, t)| t.truncate(order + jmax - k).truncate(order)).collect::<Vec<_>>())
        },
        |acc: &mut Option<Vec<MatJet>>, c, f| match acc {
            Some(a) => {
                for (ai, fi) in a.iter_mut().zip(f) {
                    ai.axpy(c, &fi);
                }
            }
            None => *acc = Some(f.into_iter().map(|t| t.scale(c)).collect()),
        },
    )?;
    let mut out = acc.expect("contour has nodes");
    let f = sym.principal().jet(x, xi, order)?;
    let minus_f = f.scale_real(-1.0);
    let mut power = MatJet::scalar_constant(f.nv(), order, f.n(), c64::new(1.0, 0.0));
    for c in contour.tail_coefficients(z) {
        out[0].axpy(c, &power);
        power = power.mul(&minus_f);
    }
    Ok(out)
}

fn contour_power_symbol(sym: &ClassicalSymbol, z: c64, big_n: usize, nodes: usize) -> Result<ClassicalSymbol> {
    let d = sym.d();
    let n = sym.n();
    let order = sym.order() * z;
    let x_indep = sym.is_x_independent();
    let mut comps = Vec::with_capacity(big_n);
    for j in 0..big_n {
        let s = sym.clone();
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], ord: usize| {
            let mut terms = contour_power_jets(&s, z, x, xi, ord, j, nodes)?;
            Ok(terms.pop().expect("nonempty"))
        });
        comps.push(HomogeneousComponent::from_jet_fn(order - j as f64, d, n, x_indep, JetKind::Analytic, jet_fn));
    }
    let out = ClassicalSymbol::new(order, d, n, comps)?;
    Ok(match sym.spatial_support() {
        Some(b) => out.with_support(b.clone()),
        None => out,
    })
}

/// Power symbol `σ(A^z)` with `big_n` components.
///
/// For `Re z < 0` the components are contour integrals of the resolvent
/// recursion; otherwise `σ(A^z) = σ(A)^{∘k} ∘ σ(A^{z−k})` with `k = ⌊Re z⌋ + 1`.
pub fn power_symbol(sym: &ClassicalSymbol, z: c64, big_n: usize) -> Result<PowerSymbol> {
    power_symbol_with_nodes(sym, z, big_n, DEFAULT_CONTOUR_NODES)
}

pub fn power_symbol_with_nodes(sym: &ClassicalSymbol, z: c64, big_n: usize, nodes: usize) -> Result<PowerSymbol> {
    if sym.order().im != 0.0 || sym.order().re <= 0.0 {
        return Err(Error::Domain(format!("power symbols need real positive order, got {}", sym.order())));
    }
    if big_n == 0 {
        return Err(Error::Config("truncation must be positive".into()));
    }
    let symbol = if z.re < 0.0 {
        contour_power_symbol(sym, z, big_n, nodes)?
    } else {
        let k = z.re.floor() as usize + 1;
        let base = contour_power_symbol(sym, z - k as f64, big_n, nodes)?;
        let mut lift = sym.clone();
        for _ in 1..k {
            lift = compose_symbols(&lift, sym, big_n)?;
        }
        compose_symbols(&lift, &base, big_n)?
    };
    Ok(PowerSymbol { exponent: z, base: sym.clone(), symbol })
}

/// `|σ_m(x,ξ)|^z = (σ_m* σ_m)^{z/2}`.
pub fn principal_modulus_power(sym: &ClassicalSymbol, z: c64) -> impl Fn(&[f64], &[f64]) -> Result<CMat> + use<> {
    let principal = sym.principal().clone();
    move |x: &[f64], xi: &[f64]| {
        let s = principal.value(x, xi)?;
        let g = &s.adjoint() * &s;
        if z.im == 0.0 && z.re >= 0.0 && z.re.fract() == 0.0 && (z.re as i64) % 2 == 0 {
            let mut out = CMat::identity(g.n());
            for _ in 0..(z.re as i64 / 2) {
                out = &out * &g;
            }
            return Ok(out);
        }
        matrix_power(&g, z * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::parametrix;
    use crate::symbols::families;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn matrix_power_examples() {
        let p = CMat::from_real_rows(&[&[4.0]]);
        assert!((matrix_power(&p, c(0.5)).unwrap()[(0, 0)] - c(2.0)).norm() < 1e-15);
        let q = CMat::from_real_diag(&[1.0, 4.0]);
        let r = matrix_power(&q, c(-0.5)).unwrap();
        assert!((&r - &CMat::from_real_diag(&[1.0, 0.5])).norm_max() < 1e-15);
        let i = matrix_power(&CMat::identity(3), c64::new(0.3, 2.0)).unwrap();
        assert!((&i - &CMat::identity(3)).norm_max() < 1e-14);
        assert!(matrix_power(&CMat::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]), c(0.5)).is_err());
        assert!(matrix_power(&CMat::from_real_diag(&[1.0, -1.0]), c(0.5)).is_err());
    }

    #[test]
    fn contour_matches_spectral() {
        let one = contour_power(&CMat::identity(1), c(-1.0), 64).unwrap();
        assert!((one[(0, 0)] - c(1.0)).norm() < 1e-6);
        let q = CMat::from_real_diag(&[1.0, 4.0]);
        let r = contour_power(&q, c(-0.5), 64).unwrap();
        assert!((&r - &CMat::from_real_diag(&[1.0, 0.5])).norm_max() < 1e-6);
        let a = contour_power(&q, c(-0.3), 64).unwrap();
        let b = contour_power(&q, c(-0.7), 64).unwrap();
        assert!((&(&a * &b) - &CMat::from_real_diag(&[1.0, 0.25])).norm_max() < 1e-6);
        assert!(contour_power(&q, c(0.5), 64).is_err());
    }

    #[test]
    fn power_of_multiplier_is_single_component() {
        let s = families::abs_xi_symbol(2, 2.0);
        let p = power_symbol(&s, c(-0.75), 3).unwrap();
        let xi = [0.3, 1.2];
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let v0 = p.components()[0].value(&[0.0, 0.0], &xi).unwrap()[(0, 0)];
        assert!((v0 - c(r2.powf(-0.75))).norm() < 1e-10 * r2.powf(-0.75));
        for j in 1..3 {
            assert!(p.components()[j].value(&[0.0, 0.0], &xi).unwrap().norm_max() < 1e-12);
        }
    }

    #[test]
    fn minus_one_power_is_parametrix() {
        let a = crate::spatial::SpatialFn::cosine(1, 1.5, 0.4, vec![1.0], 0.2);
        let sym = ClassicalSymbol::homogeneous(families::abs_xi_power(1, c(2.0)).spatial_times(&a));
        let p = power_symbol(&sym, c(-1.0), 3).unwrap();
        let b = parametrix(&sym, 3).unwrap();
        for (x, xi) in [(0.3, 1.7), (-1.1, -0.8)] {
            for j in 0..3 {
                let u = p.components()[j].value(&[x], &[xi]).unwrap();
                let v = b.components()[j].value(&[x], &[xi]).unwrap();
                assert!((&u - &v).norm_max() < 1e-6 * (1.0 + v.norm_max()), "j={j}: {u:?} vs {v:?}");
            }
        }
    }

    #[test]
    fn modulus_power_examples() {
        let m = CMat::from_rows(&[&[c(0.0), c64::new(0.0, 1.0)], &[c64::new(0.0, 1.0), c(0.0)]]);
        let sym = ClassicalSymbol::homogeneous(families::abs_xi_power(1, c(1.0)).left_mul_matrix(&m));
        let f = principal_modulus_power(&sym, c(-0.4));
        let v = f(&[0.0], &[2.0]).unwrap();
        assert!((&v - &CMat::scalar(2, c(2f64.powf(-0.4)))).norm_max() < 1e-13);
        let sq = principal_modulus_power(&sym, c(2.0))(&[0.0], &[3.0]).unwrap();
        let s = sym.principal().value(&[0.0], &[3.0]).unwrap();
        assert_eq!(sq, &s.adjoint() * &s);
    }
}

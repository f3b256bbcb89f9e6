//! Matrix-valued coefficient functions of the space variable, with jets.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::jet::MatJet;
use crate::quadrature::{BoxDomain, BoxRule};
use num_complex::Complex64 as c64;
use std::fmt;
use std::sync::Arc;

pub type SpatialJetFn = Arc<dyn Fn(&[MatJet]) -> Result<MatJet> + Send + Sync>;

/// A smooth function `x ↦ f(x) ∈ M_n`, evaluated through jets so that any
/// derivative is available on demand.
#[derive(Clone)]
pub struct SpatialFn {
    d: usize,
    n: usize,
    support: Option<BoxDomain>,
    f: SpatialJetFn,
    label: String,
}

impl fmt::Debug for SpatialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialFn")
            .field("label", &self.label)
            .field("d", &self.d)
            .field("n", &self.n)
            .field("support", &self.support)
            .finish()
    }
}

fn zero_like(vars: &[MatJet], n: usize) -> MatJet {
    let v = &vars[0];
    MatJet::zeros(v.nv(), v.order(), n)
}

fn radius_sq(vars: &[MatJet], center: &[f64]) -> MatJet {
    let mut acc = zero_like(vars, 1);
    for (v, c) in vars.iter().zip(center) {
        let dv = v.add_constant(&CMat::scalar(1, c64::new(-c, 0.0)));
        acc = acc.add(&dv.mul(&dv));
    }
    acc
}

impl SpatialFn {
    pub fn new(
        d: usize,
        n: usize,
        support: Option<BoxDomain>,
        label: impl Into<String>,
        f: impl Fn(&[MatJet]) -> Result<MatJet> + Send + Sync + 'static,
    ) -> Self {
        Self { d, n, support, f: Arc::new(f), label: label.into() }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Option<&BoxDomain> {
        self.support.as_ref()
    }

    /// Applies the function to jets of the coordinates (any number of jet
    /// variables).
    pub fn apply(&self, vars: &[MatJet]) -> Result<MatJet> {
        if vars.len() != self.d {
            return Err(Error::Dimension(format!("{} expects {} coordinates, got {}", self.label, self.d, vars.len())));
        }
        let out = (self.f)(vars)?;
        Ok(out.to_matrix(self.n))
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        let vars: Vec<MatJet> = x.iter().enumerate().map(|(i, &v)| MatJet::variable(self.d, 0, i, v)).collect();
        self.apply(&vars).map(|j| j.value()).unwrap_or_else(|_| CMat::scalar(self.n, c64::new(f64::NAN, 0.0)))
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Result<MatJet> {
        let vars: Vec<MatJet> = x.iter().enumerate().map(|(i, &v)| MatJet::variable(self.d, order, i, v)).collect();
        self.apply(&vars)
    }

    pub fn scalar_value(&self, x: &[f64]) -> c64 {
        self.eval(x)[(0, 0)]
    }

    pub fn constant(d: usize, value: CMat) -> Self {
        let n = value.n();
        Self::new(d, n, None, "constant", move |vars| {
            let v = &vars[0];
            Ok(MatJet::constant(v.nv(), v.order(), &value))
        })
    }

    pub fn scalar_constant(d: usize, c: f64) -> Self {
        Self::constant(d, CMat::scalar(1, c64::new(c, 0.0)))
    }

    /// The coordinate function `x ↦ x_i`.
    pub fn coordinate(d: usize, i: usize) -> Self {
        Self::new(d, 1, None, format!("x{i}"), move |vars| Ok(vars[i].clone()))
    }

    /// Compactly supported bump `exp(1 − 1/(1 − |x−c|²/R²))`, equal to 1 at the centre.
    pub fn bump(center: Vec<f64>, radius: f64) -> Self {
        let d = center.len();
        let support = BoxDomain::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        );
        Self::new(d, 1, Some(support), format!("bump(r={radius})"), move |vars| {
            let q = radius_sq(vars, &center).scale_real(1.0 / (radius * radius));
            if q.value()[(0, 0)].re >= 1.0 {
                return Ok(zero_like(vars, 1));
            }
            let one_minus = q.scale_real(-1.0).add_constant(&CMat::identity(1));
            Ok(one_minus.recip().scale_real(-1.0).add_constant(&CMat::identity(1)).exp())
        })
    }

    /// Gaussian `exp(−|x−c|²/w²)`; not compactly supported.
    pub fn gaussian(center: Vec<f64>, width: f64) -> Self {
        let d = center.len();
        Self::new(d, 1, None, format!("gaussian(w={width})"), move |vars| {
            Ok(radius_sq(vars, &center).scale_real(-1.0 / (width * width)).exp())
        })
    }

    /// Radial plateau: 1 for |x| ≤ R, 0 for |x| ≥ R + w, smooth transition in |x|².
    pub fn plateau(center: Vec<f64>, radius: f64, width: f64) -> Self {
        let d = center.len();
        let outer = radius + width;
        let support =
            BoxDomain::new(center.iter().map(|c| c - outer).collect(), center.iter().map(|c| c + outer).collect());
        Self::new(d, 1, Some(support), format!("plateau(R={radius},w={width})"), move |vars| {
            let r2 = radius_sq(vars, &center);
            let s = r2.value()[(0, 0)].re;
            let (a, b) = (radius * radius, outer * outer);
            if s <= a {
                return Ok(MatJet::scalar_constant(vars[0].nv(), vars[0].order(), 1, c64::new(1.0, 0.0)));
            }
            if s >= b {
                return Ok(zero_like(vars, 1));
            }
            let t = r2.add_constant(&CMat::scalar(1, c64::new(-a, 0.0))).scale_real(1.0 / (b - a));
            // h(1−t) / (h(t) + h(1−t)) with h(u) = exp(−1/u)
            let h = |u: &MatJet| u.recip().scale_real(-1.0).exp();
            let one_minus = t.scale_real(-1.0).add_constant(&CMat::identity(1));
            let ht = h(&t);
            let hs = h(&one_minus);
            Ok(hs.mul(&ht.add(&hs).recip()))
        })
    }

    /// `a + b·cos(k·x + phase)`.
    pub fn cosine(d: usize, a: f64, b: f64, k: Vec<f64>, phase: f64) -> Self {
        Self::new(d, 1, None, "cosine", move |vars| {
            let mut arg = MatJet::scalar_constant(vars[0].nv(), vars[0].order(), 1, c64::new(phase, 0.0));
            for (v, kk) in vars.iter().zip(&k) {
                arg = arg.add(&v.scale_real(*kk));
            }
            Ok(arg.cos().scale_real(b).add_constant(&CMat::scalar(1, c64::new(a, 0.0))))
        })
    }

    /// Matrix function assembled from scalar entries in row-major order.
    pub fn matrix(d: usize, n: usize, entries: Vec<SpatialFn>) -> Result<Self> {
        if entries.len() != n * n || entries.iter().any(|e| e.n != 1 || e.d != d) {
            return Err(Error::Dimension(format!("need {} scalar entries in d={d}", n * n)));
        }
        Ok(Self::new(d, n, None, format!("matrix{n}x{n}"), move |vars| {
            let mut out = MatJet::zeros(vars[0].nv(), vars[0].order(), n);
            for (k, e) in entries.iter().enumerate() {
                let mut unit = CMat::zeros(n);
                unit[(k / n, k % n)] = c64::new(1.0, 0.0);
                let basis = MatJet::constant(vars[0].nv(), vars[0].order(), &unit);
                out = out.add(&basis.mul(&e.apply(vars)?));
            }
            Ok(out)
        }))
    }

    pub fn scaled(&self, c: c64) -> Self {
        let inner = self.clone();
        Self::new(self.d, self.n, self.support.clone(), format!("{}*{c}", self.label), move |vars| {
            Ok(inner.apply(vars)?.scale(c))
        })
    }

    /// Pointwise product `self(x)·other(x)`.
    pub fn product(&self, other: &SpatialFn) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let support = match (&self.support, &other.support) {
            (Some(s), Some(t)) => Some(BoxDomain::new(
                s.lo.iter().zip(&t.lo).map(|(x, y)| x.max(*y)).collect(),
                s.hi.iter().zip(&t.hi).map(|(x, y)| x.min(*y)).collect(),
            )),
            (Some(s), None) => Some(s.clone()),
            (None, Some(t)) => Some(t.clone()),
            (None, None) => None,
        };
        let n = self.n.max(other.n);
        Self::new(self.d, n, support, format!("{}·{}", self.label, other.label), move |vars| {
            Ok(a.apply(vars)?.mul(&b.apply(vars)?))
        })
    }

    /// Pointwise sum.
    pub fn sum(&self, other: &SpatialFn) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let support = match (&self.support, &other.support) {
            (Some(s), Some(t)) => Some(BoxDomain::new(
                s.lo.iter().zip(&t.lo).map(|(x, y)| x.min(*y)).collect(),
                s.hi.iter().zip(&t.hi).map(|(x, y)| x.max(*y)).collect(),
            )),
            _ => None,
        };
        let n = self.n.max(other.n);
        Self::new(self.d, n, support, format!("{}+{}", self.label, other.label), move |vars| {
            Ok(a.apply(vars)?.add(&b.apply(vars)?))
        })
    }

    /// Scalar function times a constant matrix.
    pub fn times_matrix(&self, m: CMat) -> Self {
        let inner = self.clone();
        let n = m.n();
        Self::new(self.d, n, self.support.clone(), format!("{}·M", self.label), move |vars| {
            Ok(inner.apply(vars)?.to_matrix(n).mul(&MatJet::constant(vars[0].nv(), vars[0].order(), &m)))
        })
    }

    /// Pointwise adjoint `f(x)*`.
    pub fn adjoint(&self) -> Self {
        let inner = self.clone();
        Self::new(self.d, self.n, self.support.clone(), format!("{}*", self.label), move |vars| {
            Ok(inner.apply(vars)?.adjoint())
        })
    }

    /// Translate: `x ↦ self(x − shift)`.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let inner = self.clone();
        let sh = shift.to_vec();
        let support = self.support.as_ref().map(|s| {
            BoxDomain::new(s.lo.iter().zip(&sh).map(|(a, b)| a + b).collect(), s.hi.iter().zip(&sh).map(|(a, b)| a + b).collect())
        });
        Self::new(self.d, self.n, support, format!("{}(x-s)", self.label), move |vars| {
            let moved: Vec<MatJet> =
                vars.iter().zip(&sh).map(|(v, s)| v.add_constant(&CMat::scalar(1, c64::new(-s, 0.0)))).collect();
            inner.apply(&moved)
        })
    }

    /// Integral of the (1,1) entry over the support box.
    pub fn integral(&self, panels: usize) -> Result<c64> {
        self.integral_of(|m| m[(0, 0)], panels)
    }

    /// Integral of `g(f(x))` over the support box with a composite Gauss rule.
    pub fn integral_of(&self, g: impl Fn(&CMat) -> c64, panels: usize) -> Result<c64> {
        let support = self
            .support
            .as_ref()
            .ok_or_else(|| Error::Domain(format!("{} has no compact support box", self.label)))?;
        let rule = BoxRule::new(support, panels, 8);
        Ok(rule.points.iter().zip(&rule.weights).map(|(p, w)| g(&self.eval(p)) * *w).sum())
    }

    /// Rescales a scalar function so that its integral equals `mass`.
    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        let current = self.integral(16)?.re;
        if current.abs() < 1e-300 {
            return Err(Error::Domain("cannot normalize a function with zero integral".into()));
        }
        Ok(self.scaled(c64::new(mass / current, 0.0)))
    }
}

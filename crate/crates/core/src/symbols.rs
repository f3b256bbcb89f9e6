//! Matrix-valued classical symbols and their asymptotic calculus.
//!
//! A homogeneous component is stored as a closure producing a [`MatJet`] in
//! the `2d` variables `(x, ξ)` at a point with `ξ ≠ 0`. Variables `0..d` are
//! the space coordinates and `d..2d` the frequency coordinates.

use crate::cmat::CMat;
use crate::error::{Error, Result};
use crate::jet::{self, MatJet};
use crate::quadrature::BoxDomain;
use crate::spatial::SpatialFn;
use num_complex::Complex64 as c64;
use std::fmt;
use std::sync::Arc;

/// Default number of homogeneous components kept by the calculus.
pub const DEFAULT_TRUNCATION: usize = 4;

/// Highest jet order served by finite-difference components.
pub const FD_MAX_ORDER: usize = 4;

fn h(t: f64) -> f64 {
    if t > 0.0 { (-1.0 / t).exp() } else { 0.0 }
}

/// Radial profile of the frequency cutoff: 0 on `[0, 1/2]`, 1 on `[1, ∞)`.
pub fn cutoff_psi(r: f64) -> f64 {
    if r <= 0.5 {
        return 0.0;
    }
    if r >= 1.0 {
        return 1.0;
    }
    let a = h(2.0 * r - 1.0);
    let b = h(2.0 - 2.0 * r);
    a / (a + b)
}

/// The cutoff `φ(ξ) = ψ(|ξ|)`.
pub fn cutoff(xi: &[f64]) -> f64 {
    cutoff_psi(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// Trace convention on the internal algebra `M_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MatrixAlgebraSpec {
    pub n: usize,
}

impl MatrixAlgebraSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("matrix dimension must be at least 1".into()));
        }
        Ok(Self { n })
    }

    /// Un-normalized matrix trace, `τ(1_n) = n`.
    pub fn trace(&self, a: &CMat) -> c64 {
        a.trace()
    }
}

/// Jet closure of a component: `(x, ξ, order) ↦` jet in `2d` variables.
pub type ComponentJetFn = Arc<dyn Fn(&[f64], &[f64], usize) -> Result<MatJet> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetKind {
    Analytic,
    FiniteDifference,
}

/// A component positively homogeneous of a fixed degree in `ξ`.
#[derive(Clone)]
pub struct HomogeneousComponent {
    degree: c64,
    d: usize,
    n: usize,
    x_independent: bool,
    kind: JetKind,
    jet_fn: ComponentJetFn,
}

impl fmt::Debug for HomogeneousComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousComponent")
            .field("degree", &self.degree)
            .field("d", &self.d)
            .field("n", &self.n)
            .field("x_independent", &self.x_independent)
            .field("kind", &self.kind)
            .finish()
    }
}

fn point_vars(x: &[f64], xi: &[f64], order: usize) -> (Vec<MatJet>, Vec<MatJet>) {
    let d = x.len();
    let nv = 2 * d;
    let xs = (0..d).map(|i| MatJet::variable(nv, order, i, x[i])).collect();
    let ks = (0..d).map(|i| MatJet::variable(nv, order, d + i, xi[i])).collect();
    (xs, ks)
}

/// `|ξ|²` as a jet.
pub fn xi_norm_sq(xi: &[MatJet]) -> MatJet {
    let mut acc = xi[0].mul(&xi[0]);
    for v in &xi[1..] {
        acc = acc.add(&v.mul(v));
    }
    acc
}

/// `|ξ|^p` as a jet (ξ ≠ 0).
pub fn xi_norm_pow(xi: &[MatJet], p: c64) -> MatJet {
    xi_norm_sq(xi).powc(p * 0.5)
}

impl HomogeneousComponent {
    /// Component built from jet arithmetic on the coordinate jets; the
    /// closure receives `(x_vars, ξ_vars)`.
    pub fn analytic(
        degree: c64,
        d: usize,
        n: usize,
        x_independent: bool,
        f: impl Fn(&[MatJet], &[MatJet]) -> Result<MatJet> + Send + Sync + 'static,
    ) -> Self {
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], order: usize| {
            let (xs, ks) = point_vars(x, xi, order);
            Ok(f(&xs, &ks)?.to_matrix(n))
        });
        Self { degree, d, n, x_independent, kind: JetKind::Analytic, jet_fn }
    }

    /// Component with a caller-supplied jet closure.
    pub fn from_jet_fn(degree: c64, d: usize, n: usize, x_independent: bool, kind: JetKind, jet_fn: ComponentJetFn) -> Self {
        Self { degree, d, n, x_independent, kind, jet_fn }
    }

    /// Component given only by its values on `ℝ^d × S^{d−1}`; derivatives
    /// come from central differences of the homogeneous extension.
    pub fn from_sphere_fn(
        degree: c64,
        d: usize,
        n: usize,
        x_independent: bool,
        g: impl Fn(&[f64], &[f64]) -> CMat + Send + Sync + 'static,
    ) -> Self {
        let ext = Arc::new(move |p: &[f64]| -> CMat {
            let (x, xi) = p.split_at(d);
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = xi.iter().map(|v| v / r).collect();
            g(x, &u).scale(c64::new(r, 0.0).powc(degree))
        });
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], order: usize| {
            if order > FD_MAX_ORDER {
                return Err(Error::JetOrder { required: order, available: FD_MAX_ORDER });
            }
            let mut p = x.to_vec();
            p.extend_from_slice(xi);
            finite_difference_jet(ext.as_ref(), &p, order, n)
        });
        Self { degree, d, n, x_independent, kind: JetKind::FiniteDifference, jet_fn }
    }

    pub fn zero(degree: c64, d: usize, n: usize) -> Self {
        Self::analytic(degree, d, n, true, move |_, xi| {
            Ok(MatJet::zeros(xi[0].nv(), xi[0].order(), n))
        })
    }

    pub fn degree(&self) -> c64 {
        self.degree
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn kind(&self) -> JetKind {
        self.kind
    }

    pub fn max_order(&self) -> Option<usize> {
        match self.kind {
            JetKind::Analytic => None,
            JetKind::FiniteDifference => Some(FD_MAX_ORDER),
        }
    }

    /// Jet of order `order` at `(x, ξ)`, `ξ ≠ 0`.
    pub fn jet(&self, x: &[f64], xi: &[f64], order: usize) -> Result<MatJet> {
        if x.len() != self.d || xi.len() != self.d {
            return Err(Error::Dimension(format!("component expects d={}, got x:{} ξ:{}", self.d, x.len(), xi.len())));
        }
        if let Some(max) = self.max_order()
            && order > max
        {
            return Err(Error::JetOrder { required: order, available: max });
        }
        let j = (self.jet_fn)(x, xi, order)?;
        if j.n() != self.n {
            return Err(Error::Config(format!("component produced {}x{} values, algebra has n={}", j.n(), j.n(), self.n)));
        }
        Ok(j)
    }

    /// Value of the homogeneous extension at `(x, ξ)`, `ξ ≠ 0`.
    pub fn value(&self, x: &[f64], xi: &[f64]) -> Result<CMat> {
        Ok(self.jet(x, xi, 0)?.value())
    }

    /// Value at a unit direction `u`.
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<CMat> {
        self.value(x, u)
    }

    /// `∂_ξ^α ∂_x^β σ(x, ξ)`.
    pub fn derivative(&self, x: &[f64], xi: &[f64], alpha: &[u8], beta: &[u8]) -> Result<CMat> {
        let order: usize = alpha.iter().chain(beta).map(|&v| v as usize).sum();
        let j = self.jet(x, xi, order)?;
        let mut gamma = beta.to_vec();
        gamma.extend_from_slice(alpha);
        j.derivative(&gamma)
    }

    /// Relative defect of the Euler identity `ξ·∇_ξ σ = degree·σ`. Meaningless for
    /// components that vanish up to roundoff.
    pub fn euler_defect(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let d = self.d;
        let j = self.jet(x, xi, 1)?;
        let mut lhs = CMat::zeros(self.n);
        for i in 0..d {
            let mut g = vec![0u8; 2 * d];
            g[d + i] = 1;
            lhs.axpy(c64::new(xi[i], 0.0), &j.derivative(&g)?);
        }
        let rhs = j.value().scale(self.degree);
        // degree 0 has rhs = 0, so the value itself sets the scale
        let scale = (j.value().norm_max() * self.degree.norm().max(1.0)).max(lhs.norm_max()).max(1e-300);
        Ok((&lhs - &rhs).norm_max() / scale)
    }

    /// Left multiplication by a constant matrix (scalar components are
    /// promoted).
    pub fn left_mul_matrix(&self, m: &CMat) -> Self {
        let inner = self.clone();
        let m = m.clone();
        let n = m.n();
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], order: usize| {
            let j = inner.jet(x, xi, order)?.to_matrix(n);
            Ok(j.left_mul_const(&m))
        });
        Self { degree: self.degree, d: self.d, n, x_independent: self.x_independent, kind: self.kind, jet_fn }
    }

    /// Pointwise product `f(x)·σ(x, ξ)`.
    pub fn spatial_times(&self, f: &SpatialFn) -> Self {
        let inner = self.clone();
        let f = f.clone();
        let n = self.n.max(f.n());
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], order: usize| {
            let s = inner.jet(x, xi, order)?;
            let (xs, _) = point_vars(x, xi, order);
            let fx = f.apply(&xs)?;
            Ok(fx.mul(&s).to_matrix(n))
        });
        Self { degree: self.degree, d: self.d, n, x_independent: false, kind: self.kind, jet_fn }
    }

    /// Pointwise product `σ(x, ξ)·f(x)`.
    pub fn times_spatial(&self, f: &SpatialFn) -> Self {
        let inner = self.clone();
        let f = f.clone();
        let n = self.n.max(f.n());
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], order: usize| {
            let s = inner.jet(x, xi, order)?;
            let (xs, _) = point_vars(x, xi, order);
            Ok(s.mul(&f.apply(&xs)?).to_matrix(n))
        });
        Self { degree: self.degree, d: self.d, n, x_independent: false, kind: self.kind, jet_fn }
    }

    /// Sum of two components of equal degree.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if (self.degree - other.degree).norm() > 1e-12 || self.d != other.d {
            return Err(Error::Config("only components of equal degree and dimension can be added".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        let n = self.n.max(other.n);
        let kind = if self.kind == JetKind::Analytic && other.kind == JetKind::Analytic {
            JetKind::Analytic
        } else {
            JetKind::FiniteDifference
        };
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], order: usize| {
            Ok(a.jet(x, xi, order)?.add(&b.jet(x, xi, order)?).to_matrix(n))
        });
        Ok(Self { degree: self.degree, d: self.d, n, x_independent: self.x_independent && other.x_independent, kind, jet_fn })
    }

    pub fn scaled(&self, c: c64) -> Self {
        let inner = self.clone();
        let jet_fn: ComponentJetFn =
            Arc::new(move |x: &[f64], xi: &[f64], order: usize| Ok(inner.jet(x, xi, order)?.scale(c)));
        Self { jet_fn, ..self.clone() }
    }

    /// Pointwise adjoint `σ(x, ξ)*` (degree conjugated).
    pub fn pointwise_adjoint(&self) -> Self {
        let inner = self.clone();
        let jet_fn: ComponentJetFn =
            Arc::new(move |x: &[f64], xi: &[f64], order: usize| Ok(inner.jet(x, xi, order)?.adjoint()));
        Self { degree: self.degree.conj(), jet_fn, ..self.clone() }
    }
}

/// Taylor coefficients of `f` at `p` from central differences, order ≤ 4.
fn finite_difference_jet(f: &dyn Fn(&[f64]) -> CMat, p: &[f64], order: usize, n: usize) -> Result<MatJet> {
    let nv = p.len();
    let tab = jet::table(nv, order);
    let scale = 1.0 + p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut blocks = Vec::with_capacity(tab.len_for(order));
    for gamma in &tab.monomials()[..tab.len_for(order)] {
        let k: usize = gamma.iter().map(|&g| g as usize).sum();
        if k == 0 {
            blocks.push(f(p));
            continue;
        }
        let hstep = f64::EPSILON.powf(1.0 / (k as f64 + 2.0)) * scale;
        // tensor product of central k-th difference stencils
        let mut acc = CMat::zeros(n);
        let mut offsets = vec![0usize; nv];
        loop {
            let mut w = 1.0;
            let mut q = p.to_vec();
            for v in 0..nv {
                let g = gamma[v] as usize;
                if g == 0 {
                    continue;
                }
                let j = offsets[v];
                w *= if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(g, j);
                q[v] += (g as f64 / 2.0 - j as f64) * hstep;
            }
            acc.axpy(c64::new(w, 0.0), &f(&q));
            let mut v = 0;
            loop {
                if v == nv {
                    break;
                }
                if offsets[v] < gamma[v] as usize {
                    offsets[v] += 1;
                    break;
                }
                offsets[v] = 0;
                v += 1;
            }
            if v == nv {
                break;
            }
        }
        let denom = hstep.powi(k as i32) * jet::multi_factorial(gamma);
        blocks.push(acc.scale_real(1.0 / denom));
    }
    MatJet::from_coefficients(nv, order, n, blocks)
}

fn binomial(n: usize, k: usize) -> f64 {
    jet::factorial(n) / (jet::factorial(k) * jet::factorial(n - k))
}

/// A classical symbol `σ ∼ Σ_j φ(ξ) σ_{m−j}` truncated to its listed components.
#[derive(Clone, Debug)]
pub struct ClassicalSymbol {
    order: c64,
    d: usize,
    algebra: MatrixAlgebraSpec,
    components: Vec<HomogeneousComponent>,
    spatial_support: Option<BoxDomain>,
}

impl ClassicalSymbol {
    pub fn new(order: c64, d: usize, n: usize, components: Vec<HomogeneousComponent>) -> Result<Self> {
        let algebra = MatrixAlgebraSpec::new(n)?;
        if components.is_empty() {
            return Err(Error::Config("a classical symbol needs at least one component".into()));
        }
        for (j, c) in components.iter().enumerate() {
            let expected = order - j as f64;
            if (c.degree - expected).norm() > 1e-12 * (1.0 + expected.norm()) {
                return Err(Error::Config(format!("component {j} has degree {} but {expected} is required", c.degree)));
            }
            if c.d != d {
                return Err(Error::Dimension(format!("component {j} has d={}, symbol has d={d}", c.d)));
            }
            if c.n != n {
                return Err(Error::Config(format!("component {j} is {}x{}, algebra has n={n}", c.n, c.n)));
            }
        }
        Ok(Self { order, d, algebra, components, spatial_support: None })
    }

    /// Symbol with a single component.
    pub fn homogeneous(component: HomogeneousComponent) -> Self {
        let (order, d, n) = (component.degree, component.d, component.n);
        Self { order, d, algebra: MatrixAlgebraSpec { n }, components: vec![component], spatial_support: None }
    }

    pub fn with_support(mut self, support: BoxDomain) -> Self {
        self.spatial_support = Some(support);
        self
    }

    pub fn order(&self) -> c64 {
        self.order
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.algebra.n
    }

    pub fn algebra(&self) -> MatrixAlgebraSpec {
        self.algebra
    }

    pub fn truncation(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[HomogeneousComponent] {
        &self.components
    }

    pub fn component(&self, j: usize) -> Option<&HomogeneousComponent> {
        self.components.get(j)
    }

    pub fn principal(&self) -> &HomogeneousComponent {
        &self.components[0]
    }

    pub fn spatial_support(&self) -> Option<&BoxDomain> {
        self.spatial_support.as_ref()
    }

    pub fn is_x_independent(&self) -> bool {
        self.components.iter().all(|c| c.x_independent)
    }

    /// Keeps the first `n` components.
    pub fn truncated(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.components.truncate(n.max(1));
        s
    }

    /// Appends a component of the next degree.
    pub fn push_component(&mut self, c: HomogeneousComponent) -> Result<()> {
        let expected = self.order - self.components.len() as f64;
        if (c.degree - expected).norm() > 1e-12 * (1.0 + expected.norm()) || c.n != self.n() || c.d != self.d {
            return Err(Error::Config(format!("component of degree {} does not extend a symbol expecting {expected}", c.degree)));
        }
        self.components.push(c);
        Ok(())
    }

    /// Full symbol `Σ_j φ(ξ) σ_{m−j}(x, ξ)`.
    pub fn evaluate(&self, x: &[f64], xi: &[f64]) -> Result<CMat> {
        if x.len() != self.d || xi.len() != self.d {
            return Err(Error::Dimension(format!("symbol expects d={}, got x:{} ξ:{}", self.d, x.len(), xi.len())));
        }
        let phi = cutoff(xi);
        let mut out = CMat::zeros(self.n());
        if phi == 0.0 {
            return Ok(out);
        }
        for c in &self.components {
            out.axpy(c64::new(phi, 0.0), &c.value(x, xi)?);
        }
        Ok(out)
    }

    /// Sup of `‖σ(x,ξ)‖ (1+|ξ|²)^{−Re m/2}` over the given samples.
    pub fn class_constant(&self, xs: &[Vec<f64>], xis: &[Vec<f64>]) -> Result<f64> {
        let mut c = 0.0f64;
        for x in xs {
            for xi in xis {
                let s = self.evaluate(x, xi)?;
                let w = (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).powf(-self.order.re / 2.0);
                c = c.max(s.op_norm() * w);
            }
        }
        Ok(c)
    }
}

/// `(−i)^s`
pub(crate) fn minus_i_pow(s: usize) -> c64 {
    [c64::new(1.0, 0.0), c64::new(0.0, -1.0), c64::new(-1.0, 0.0), c64::new(0.0, 1.0)][s % 4]
}

/// `(α, 0)` and `(0, α)` embeddings of a `d`-index into `2d` variables.
pub(crate) fn split_shift(alpha: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let d = alpha.len();
    let mut ax = alpha.to_vec();
    ax.extend(std::iter::repeat_n(0u8, d));
    let mut axi = vec![0u8; d];
    axi.extend_from_slice(alpha);
    (ax, axi)
}

/// `(1/α!) ∂_ξ^α B · D_x^α A` summed over `|α| = s`, truncated to `order`.
pub(crate) fn leibniz_term(bj: &MatJet, aj: &MatJet, d: usize, s: usize, order: usize) -> Result<MatJet> {
    let n = bj.n().max(aj.n());
    let mut out = MatJet::zeros(2 * d, order, n);
    for alpha in jet::multi_indices_of_degree(d, s) {
        let (ax, axi) = split_shift(&alpha);
        let db = bj.shift(&axi)?.truncate(order);
        let da = aj.shift(&ax)?.truncate(order);
        let c = minus_i_pow(s) / jet::multi_factorial(&alpha);
        out = out.add(&db.mul(&da).scale(c));
    }
    Ok(out)
}

fn check_orders(sym: &ClassicalSymbol, needed: impl Fn(usize) -> usize, n_out: usize) -> Result<()> {
    for (k, c) in sym.components.iter().enumerate().take(n_out) {
        let req = needed(k);
        if let Some(max) = c.max_order()
            && req > max
        {
            return Err(Error::JetOrder { required: req, available: max });
        }
    }
    Ok(())
}

/// Symbol of `Op(b)∘Op(a)` with `big_n` components.
pub fn compose_symbols(b: &ClassicalSymbol, a: &ClassicalSymbol, big_n: usize) -> Result<ClassicalSymbol> {
    if a.d != b.d {
        return Err(Error::Dimension(format!("compose: d={} vs d={}", b.d, a.d)));
    }
    if a.n() != b.n() && a.n() != 1 && b.n() != 1 {
        return Err(Error::Dimension(format!("compose: n={} vs n={}", b.n(), a.n())));
    }
    if big_n == 0 {
        return Err(Error::Config("truncation must be positive".into()));
    }
    check_orders(b, |k| big_n - 1 - k.min(big_n - 1), big_n)?;
    check_orders(a, |l| big_n - 1 - l.min(big_n - 1), big_n)?;
    let d = a.d;
    let n = a.n().max(b.n());
    let order = a.order + b.order;
    let mut comps = Vec::with_capacity(big_n);
    for j in 0..big_n {
        let (bs, as_) = (b.clone(), a.clone());
        let x_indep = a.is_x_independent() && b.is_x_independent();
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], ord: usize| {
            let mut out = MatJet::zeros(2 * d, ord, n);
            let bjets: Vec<Option<MatJet>> = (0..=j)
                .map(|k| bs.components.get(k).map(|c| c.jet(x, xi, ord + j - k)).transpose())
                .collect::<Result<_>>()?;
            let ajets: Vec<Option<MatJet>> = (0..=j)
                .map(|l| {
                    as_.components
                        .get(l)
                        .map(|c| c.jet(x, xi, if c.x_independent { ord } else { ord + j - l }))
                        .transpose()
                })
                .collect::<Result<_>>()?;
            for k in 0..=j {
                let Some(bk) = &bjets[k] else { continue };
                for l in 0..=(j - k) {
                    let Some(al) = &ajets[l] else { continue };
                    let s = j - k - l;
                    if s > 0 && as_.components[l].x_independent {
                        continue;
                    }
                    out = out.add(&leibniz_term(bk, al, d, s, ord)?);
                }
            }
            Ok(out.to_matrix(n))
        });
        let kind = if a.components.iter().chain(&b.components).all(|c| c.kind == JetKind::Analytic) {
            JetKind::Analytic
        } else {
            JetKind::FiniteDifference
        };
        comps.push(HomogeneousComponent::from_jet_fn(order - j as f64, d, n, x_indep, kind, jet_fn));
    }
    let mut out = ClassicalSymbol::new(order, d, n, comps)?;
    out.spatial_support = match (&a.spatial_support, &b.spatial_support) {
        (Some(s), _) => Some(s.clone()),
        (None, s) => s.clone(),
    };
    Ok(out)
}

/// Symbol of the formal `L²` adjoint with `big_n` components.
pub fn adjoint_symbol(a: &ClassicalSymbol, big_n: usize) -> Result<ClassicalSymbol> {
    if big_n == 0 {
        return Err(Error::Config("truncation must be positive".into()));
    }
    check_orders(a, |k| 2 * (big_n - 1 - k.min(big_n - 1)), big_n)?;
    let d = a.d;
    let n = a.n();
    let order = a.order.conj();
    let mut comps = Vec::with_capacity(big_n);
    for j in 0..big_n {
        let src = a.clone();
        let jet_fn: ComponentJetFn = Arc::new(move |x: &[f64], xi: &[f64], ord: usize| {
            let mut out = MatJet::zeros(2 * d, ord, n);
            for k in 0..=j {
                let Some(c) = src.components.get(k) else { continue };
                let s = j - k;
                if s > 0 && c.x_independent {
                    continue;
                }
                let ak = c.jet(x, xi, ord + 2 * s)?.adjoint();
                for alpha in jet::multi_indices_of_degree(d, s) {
                    let mut both = alpha.clone();
                    both.extend_from_slice(&alpha);
                    let term = ak.shift(&both)?.truncate(ord);
                    out = out.add(&term.scale(minus_i_pow(s) / jet::multi_factorial(&alpha)));
                }
            }
            Ok(out.to_matrix(n))
        });
        let x_indep = a.is_x_independent();
        let kind = if a.components.iter().all(|c| c.kind == JetKind::Analytic) {
            JetKind::Analytic
        } else {
            JetKind::FiniteDifference
        };
        comps.push(HomogeneousComponent::from_jet_fn(order - j as f64, d, n, x_indep, kind, jet_fn));
    }
    let mut out = ClassicalSymbol::new(order, d, n, comps)?;
    out.spatial_support = a.spatial_support.clone();
    Ok(out)
}

/// Built-in symbol families with analytic jets.
pub mod families {
    use super::*;

    /// `|ξ|^m`.
    pub fn abs_xi_power(d: usize, m: c64) -> HomogeneousComponent {
        HomogeneousComponent::analytic(m, d, 1, true, move |_, xi| Ok(xi_norm_pow(xi, m)))
    }

    /// `ξ_j`.
    pub fn xi_coordinate(d: usize, j: usize) -> HomogeneousComponent {
        HomogeneousComponent::analytic(c64::new(1.0, 0.0), d, 1, true, move |_, xi| Ok(xi[j].clone()))
    }

    /// `ξ_j / |ξ|`.
    pub fn riesz_angle(d: usize, j: usize) -> HomogeneousComponent {
        HomogeneousComponent::analytic(c64::new(0.0, 0.0), d, 1, true, move |_, xi| {
            Ok(xi[j].mul(&xi_norm_pow(xi, c64::new(-1.0, 0.0))))
        })
    }

    /// `ξ^β |ξ|^{degree − |β|}`: a polynomial angular harmonic of any degree.
    pub fn angular_monomial(d: usize, degree: c64, beta: Vec<u8>) -> HomogeneousComponent {
        let b: usize = beta.iter().map(|&v| v as usize).sum();
        HomogeneousComponent::analytic(degree, d, 1, true, move |_, xi| {
            let mut acc = xi_norm_pow(xi, degree - b as f64);
            for (v, &p) in xi.iter().zip(&beta) {
                for _ in 0..p {
                    acc = acc.mul(v);
                }
            }
            Ok(acc)
        })
    }

    /// Degree-0 component `f(x)`.
    pub fn spatial(f: &SpatialFn) -> HomogeneousComponent {
        let f = f.clone();
        let n = f.n();
        HomogeneousComponent::analytic(c64::new(0.0, 0.0), f.d(), n, false, move |x, _| f.apply(x))
    }

    /// Constant matrix `M` as a degree-0 component.
    pub fn constant(d: usize, m: CMat) -> HomogeneousComponent {
        let n = m.n();
        HomogeneousComponent::analytic(c64::new(0.0, 0.0), d, n, true, move |_, xi| {
            Ok(MatJet::constant(xi[0].nv(), xi[0].order(), &m))
        })
    }

    /// Scalar multiplier symbol `|ξ|^m`.
    pub fn abs_xi_symbol(d: usize, m: f64) -> ClassicalSymbol {
        ClassicalSymbol::homogeneous(abs_xi_power(d, c64::new(m, 0.0)))
    }

    /// First-order 2×2 symbol `P(x)|ξ| + Q(x)` with Hermitian positive `P`
    /// and non-commuting, x-dependent entries; used by the group-law checks.
    pub fn matrix_test_symbol() -> ClassicalSymbol {
        let cs = |a: f64, b: f64, k: f64, ph: f64| SpatialFn::cosine(1, a, b, vec![k], ph);
        let zero = SpatialFn::scalar_constant(1, 0.0);
        let off = cs(0.0, 0.3, 1.0, 0.4);
        let offi = cs(0.0, 0.2, 2.0, 0.1).scaled(c64::new(0.0, 1.0));
        let p = SpatialFn::matrix(
            1,
            2,
            vec![cs(2.0, 0.5, 1.0, 0.0), off.sum(&offi), off.sum(&offi.scaled(c64::new(-1.0, 0.0))), cs(1.5, 0.4, 2.0, 0.3)],
        )
        .expect("2x2 entries");
        let q = SpatialFn::matrix(1, 2, vec![cs(0.2, 0.1, 1.0, 0.0), zero.clone(), zero, cs(-0.1, 0.2, 1.0, 1.0)])
            .expect("2x2 entries");
        let s0 = abs_xi_power(1, c64::new(1.0, 0.0)).left_mul_matrix(&CMat::identity(2)).spatial_times(&p);
        ClassicalSymbol::new(c64::new(1.0, 0.0), 1, 2, vec![s0, spatial(&q)]).expect("consistent components")
    }

    /// Multiplication symbol `f(x)`.
    pub fn multiplication_symbol(f: &SpatialFn) -> ClassicalSymbol {
        let s = ClassicalSymbol::homogeneous(spatial(f));
        match f.support() {
            Some(b) => s.with_support(b.clone()),
            None => s,
        }
    }
}

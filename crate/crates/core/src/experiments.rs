//! End-to-end pipelines: build operators, measure, predict, compare.
//!
//! Each experiment takes a plain config (strictly parsed, every field
//! defaulted) and returns a [`Report`] with the primary comparison, the
//! auxiliary checks and a data series ready for CSV export.

use crate::cmat::CMat;
use crate::elliptic::parametrix;
use crate::error::{Error, Result};
use crate::powers::{contour_power, matrix_power, power_symbol, DEFAULT_CONTOUR_NODES};
use crate::predictors::{self, CouplingLaw, RandomModel};
use crate::quantize::{quantize, DiscretizedOperator, GridSpec, MultiplicationScheme};
use crate::spatial::SpatialFn;
use crate::spectral::{
    dixmier_log_average, log_grid, weyl_limit, MicrolocalCounter, SingularValueFunction, NULL_THRESHOLD,
};
use crate::symbols::{compose_symbols, families, ClassicalSymbol, HomogeneousComponent};
use crate::zeta::{extrapolate_residue, residue_at_pole, symbolic_zeta, BandCorrection, OperatorZeta, ZetaSample};
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub pass: bool,
}

/// Tabular data series (one experiment's CSV payload).
#[derive(Clone, Debug, Default, Serialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub anchor: String,
    pub predicted: f64,
    pub measured: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// named auxiliary numbers (per-level estimates, fit diagnostics, ...)
    pub metrics: Vec<(String, f64)>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub series: Series,
}

impl Report {
    fn new(kind: ExperimentKind, predicted: f64, measured: f64, tolerance: f64) -> Self {
        let relative_error = relative_error(measured, predicted);
        let mut r = Self {
            experiment: kind.name().to_string(),
            anchor: kind.anchor().to_string(),
            predicted,
            measured,
            relative_error,
            tolerance,
            pass: true,
            checks: Vec::new(),
            metrics: Vec::new(),
            warnings: Vec::new(),
            series: Series::default(),
        };
        r.check("relative error", relative_error, Bound::AtMost, tolerance);
        r
    }

    pub fn check(&mut self, name: &str, value: f64, bound: Bound, threshold: f64) {
        let pass = match bound {
            Bound::AtMost => value <= threshold,
            Bound::AtLeast => value >= threshold,
        };
        self.pass &= pass;
        self.checks.push(Check { name: name.to_string(), value, bound, threshold, pass });
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    fn warn_if(&mut self, p: &predictors::Prediction, what: &str) {
        if p.precision_warning {
            self.warnings.push(format!(
                "{what}: quadrature levels disagree by {:.2}% ({} vs {})",
                100.0 * p.refinement_gap,
                p.coarse_value,
                p.value
            ));
        }
    }

    /// One-line verdict.
    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let mut s = format!(
            "{}: predicted {:.6} measured {:.6} rel.err {:.3}% (tol {:.3}%)",
            self.experiment,
            self.predicted,
            self.measured,
            100.0 * self.relative_error,
            100.0 * self.tolerance
        );
        if !failed.is_empty() {
            s.push_str(&format!("; failed: {}", failed.join(", ")));
        }
        s
    }
}

/// Seed used when neither the config nor the command line provides one.
pub const DEFAULT_SEED: u64 = 20261016;

pub fn relative_error(measured: f64, predicted: f64) -> f64 {
    if predicted == 0.0 { measured.abs() } else { (measured - predicted).abs() / predicted.abs() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    WeylBessel,
    WeylElliptic,
    WeylCommutatorCz,
    WeylCommutatorFrac,
    ZetaResidue,
    ParametrixCheck,
    PowerGroupCheck,
    MicrolocalCount,
    DosRandom,
    DixmierTrace,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        Self::WeylBessel,
        Self::WeylElliptic,
        Self::WeylCommutatorCz,
        Self::WeylCommutatorFrac,
        Self::ZetaResidue,
        Self::ParametrixCheck,
        Self::PowerGroupCheck,
        Self::MicrolocalCount,
        Self::DosRandom,
        Self::DixmierTrace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WeylBessel => "weyl_bessel",
            Self::WeylElliptic => "weyl_elliptic",
            Self::WeylCommutatorCz => "weyl_commutator_cz",
            Self::WeylCommutatorFrac => "weyl_commutator_frac",
            Self::ZetaResidue => "zeta_residue",
            Self::ParametrixCheck => "parametrix_check",
            Self::PowerGroupCheck => "power_group_check",
            Self::MicrolocalCount => "microlocal_count",
            Self::DosRandom => "dos_random",
            Self::DixmierTrace => "dixmier_trace",
        }
    }

    /// Fixed registry of the statements each experiment tests.
    pub fn anchor(self) -> &'static str {
        match self {
            Self::WeylBessel => "weyl-law/order-minus-m: lim t^{m/d} mu(t, M_f T)",
            Self::WeylElliptic => "weyl-law/finite-projection: lim t^{m/d} mu(t, M_pg A^-1 M_pg)",
            Self::WeylCommutatorCz => "weyl-law/cz-commutator: lim t^{1/d} mu(t, [T_phi, M_f])",
            Self::WeylCommutatorFrac => "weyl-law/fractional-commutator: lim t^{(1-a)/d} mu(t, [I^a, M_f])",
            Self::ZetaResidue => "zeta/residue-at-d-over-m: Res zeta_{A,phi} = symbol integral",
            Self::ParametrixCheck => "symbols/parametrix: sigma(B) o sigma(A) = 1 mod S^{-N}",
            Self::PowerGroupCheck => "symbols/complex-powers: A^z A^w = A^{z+w}",
            Self::MicrolocalCount => "counting/microlocal: Tr(M_phi Q chi_[0,l](A)) ~ c l^{d/m}",
            Self::DosRandom => "counting/density-of-states: N(l) ~ c l^{d/m}",
            Self::DixmierTrace => "trace/dixmier: log-average of mu equals symbol integral",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Experiment {
    WeylBessel(WeylBesselConfig),
    WeylElliptic(WeylEllipticConfig),
    WeylCommutatorCz(CzConfig),
    WeylCommutatorFrac(FracConfig),
    ZetaResidue(ZetaConfig),
    ParametrixCheck(ParametrixConfig),
    PowerGroupCheck(PowerGroupConfig),
    MicrolocalCount(MicrolocalConfig),
    DosRandom(DosConfig),
    DixmierTrace(DixmierConfig),
}

impl Experiment {
    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::WeylBessel => Self::WeylBessel(Default::default()),
            ExperimentKind::WeylElliptic => Self::WeylElliptic(Default::default()),
            ExperimentKind::WeylCommutatorCz => Self::WeylCommutatorCz(Default::default()),
            ExperimentKind::WeylCommutatorFrac => Self::WeylCommutatorFrac(Default::default()),
            ExperimentKind::ZetaResidue => Self::ZetaResidue(Default::default()),
            ExperimentKind::ParametrixCheck => Self::ParametrixCheck(Default::default()),
            ExperimentKind::PowerGroupCheck => Self::PowerGroupCheck(Default::default()),
            ExperimentKind::MicrolocalCount => Self::MicrolocalCount(Default::default()),
            ExperimentKind::DosRandom => Self::DosRandom(Default::default()),
            ExperimentKind::DixmierTrace => Self::DixmierTrace(Default::default()),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        match self {
            Self::WeylBessel(_) => ExperimentKind::WeylBessel,
            Self::WeylElliptic(_) => ExperimentKind::WeylElliptic,
            Self::WeylCommutatorCz(_) => ExperimentKind::WeylCommutatorCz,
            Self::WeylCommutatorFrac(_) => ExperimentKind::WeylCommutatorFrac,
            Self::ZetaResidue(_) => ExperimentKind::ZetaResidue,
            Self::ParametrixCheck(_) => ExperimentKind::ParametrixCheck,
            Self::PowerGroupCheck(_) => ExperimentKind::PowerGroupCheck,
            Self::MicrolocalCount(_) => ExperimentKind::MicrolocalCount,
            Self::DosRandom(_) => ExperimentKind::DosRandom,
            Self::DixmierTrace(_) => ExperimentKind::DixmierTrace,
        }
    }

    /// Range checks that do not need any numerical work.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::WeylBessel(c) => {
                if c.npts.is_empty() {
                    return Err(Error::Config("npts needs at least one level".into()));
                }
                c.window.validate()?;
                c.npts.iter().try_for_each(|n| GridSpec::new(1, c.l, *n).map(|_| ()))
            }
            Self::WeylElliptic(c) => {
                c.window.validate()?;
                GridSpec::new(1, c.l, c.npts).map(|_| ())
            }
            Self::WeylCommutatorCz(c) => {
                c.window.validate()?;
                positive("radius", c.radius)?;
                GridSpec::new(2, 4.0 * c.radius, c.npts).map(|_| ())
            }
            Self::WeylCommutatorFrac(c) => {
                predictors::check_frac_range(c.alpha, c.d)?;
                c.window.validate()?;
                GridSpec::new(c.d, c.l, c.npts).map(|_| ())
            }
            Self::ZetaResidue(c) => {
                if c.samples < 4 {
                    return Err(Error::Config(format!("zeta fit needs at least 4 samples, got {}", c.samples)));
                }
                GridSpec::new(2, c.l, c.npts).map(|_| ())
            }
            Self::ParametrixCheck(c) => {
                if c.ceilings.len() < 2 || c.truncation == 0 {
                    return Err(Error::Config("need at least two band ceilings and a positive truncation".into()));
                }
                GridSpec::new(1, c.l, c.npts).map(|_| ())
            }
            Self::PowerGroupCheck(c) => {
                if c.matrices == 0 || c.max_size < 2 {
                    return Err(Error::Config("need at least one matrix of size ≥ 2".into()));
                }
                Ok(())
            }
            Self::MicrolocalCount(c) => {
                if !(c.lambda_lo > 0.0 && c.lambda_lo < c.lambda_hi && c.lambda_count >= 2) {
                    return Err(Error::Config("λ range needs 0 < lo < hi and at least 2 points".into()));
                }
                GridSpec::new(2, c.l, c.oracle_npts)?;
                GridSpec::new(2, c.l, c.npts).map(|_| ())
            }
            Self::DosRandom(c) => {
                if c.samples == 0 || c.stderr_samples.contains(&0) {
                    return Err(Error::Config("sample counts must be positive".into()));
                }
                if !(c.lambda_lo > 0.0 && c.lambda_lo < c.lambda_hi && c.lambda_count >= 1) {
                    return Err(Error::Config("λ range needs 0 < lo < hi and at least 1 point".into()));
                }
                GridSpec::new(1, c.l, c.npts).map(|_| ())
            }
            Self::DixmierTrace(c) => {
                if !(c.fraction > 0.0 && c.drift_range.0 > 0.0 && c.drift_range.0 < c.drift_range.1 && c.drift_range.1 <= 1.0)
                {
                    return Err(Error::Config("Dixmier fractions must lie in (0, 1]".into()));
                }
                GridSpec::new(2, c.l, c.npts).map(|_| ())
            }
        }
    }

    pub fn run(&self, seed: u64) -> Result<Report> {
        self.validate()?;
        match self {
            Self::WeylBessel(c) => weyl_bessel(c),
            Self::WeylElliptic(c) => weyl_elliptic(c),
            Self::WeylCommutatorCz(c) => weyl_commutator_cz(c),
            Self::WeylCommutatorFrac(c) => weyl_commutator_frac(c),
            Self::ZetaResidue(c) => zeta_residue(c),
            Self::ParametrixCheck(c) => parametrix_check(c),
            Self::PowerGroupCheck(c) => power_group_check(c, seed),
            Self::MicrolocalCount(c) => microlocal_count(c),
            Self::DosRandom(c) => dos_random(c, seed),
            Self::DixmierTrace(c) => dixmier_trace(c),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() { Ok(()) } else { Err(Error::Config(format!("{name} must be positive, got {v}"))) }
}

/// Weyl window as fractions of the effective weight.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowFractions {
    pub lo: f64,
    pub hi: f64,
}

impl Default for WindowFractions {
    fn default() -> Self {
        Self { lo: crate::spectral::DEFAULT_WINDOW.0, hi: crate::spectral::DEFAULT_WINDOW.1 }
    }
}

impl WindowFractions {
    fn validate(&self) -> Result<()> {
        if self.lo > 0.0 && self.lo < self.hi && self.hi <= 0.5 {
            Ok(())
        } else {
            Err(Error::Config(format!("window fractions need 0 < lo < hi ≤ 0.5, got ({}, {})", self.lo, self.hi)))
        }
    }

    fn absolute(&self, svf: &SingularValueFunction) -> (f64, f64) {
        let mut w = svf.effective_weight(NULL_THRESHOLD);
        if w == 0.0 {
            w = svf.total_weight();
        }
        (self.lo * w, self.hi * w)
    }
}

/// Measured Weyl limit with the sampled curve `t^{m/d} μ(t)` over the window.
fn measure_weyl(
    op: &DiscretizedOperator,
    m: f64,
    d: usize,
    window: &WindowFractions,
) -> Result<(crate::spectral::WeylEstimate, SingularValueFunction)> {
    let svf = SingularValueFunction::from_operator(op)?;
    let est = weyl_limit(&svf, m, d, window.absolute(&svf))?;
    Ok((est, svf))
}

fn push_curve(series: &mut Series, level: f64, svf: &SingularValueFunction, m: f64, d: usize, window: (f64, f64)) {
    for t in log_grid(window.0, window.1, 64) {
        let mu = svf.mu(t);
        series.push(vec![level, t, mu, t.powf(m / d as f64) * mu]);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylBesselConfig {
    pub l: f64,
    pub radius: f64,
    pub npts: Vec<usize>,
    pub window: WindowFractions,
    pub tolerance: f64,
}

impl Default for WeylBesselConfig {
    fn default() -> Self {
        Self { l: 8.0, radius: 1.0, npts: vec![1024, 2048, 4096], window: Default::default(), tolerance: 0.05 }
    }
}

/// `T = M_χ J^{−1}` in d = 1 with `∫χ = 1`, over a doubling sweep.
pub fn weyl_bessel(cfg: &WeylBesselConfig) -> Result<Report> {
    let chi = SpatialFn::bump(vec![0.0], cfg.radius).with_mass(1.0)?;
    let pred = predictors::expected_weyl(&families::abs_xi_symbol(1, -1.0), &chi, 1.0, 1)?;
    let mut series = Series::new(&["npts", "t", "mu", "t_mu"]);
    let mut errors = Vec::new();
    let mut last = 0.0;
    let mut metrics = Vec::new();
    for &npts in &cfg.npts {
        let grid = GridSpec::new(1, cfg.l, npts)?;
        let t = DiscretizedOperator::multiplication(&grid, &chi)?.compose(&DiscretizedOperator::bessel_potential(&grid, 1.0))?;
        let (est, svf) = measure_weyl(&t, 1.0, 1, &cfg.window)?;
        push_curve(&mut series, npts as f64, &svf, 1.0, 1, est.window);
        errors.push(relative_error(est.limit, pred.value));
        metrics.push((format!("limit@{npts}"), est.limit));
        metrics.push((format!("spread@{npts}"), est.spread));
        last = est.limit;
    }
    let mut r = Report::new(ExperimentKind::WeylBessel, pred.value, last, cfg.tolerance);
    r.warn_if(&pred, "expected_weyl");
    let worst_increase = errors.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    if errors.len() > 1 {
        r.check("error increase between doubling levels", worst_increase, Bound::AtMost, 0.0);
    }
    r.metrics = metrics;
    r.series = series;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeylEllipticConfig {
    pub l: f64,
    pub radius: f64,
    pub npts: usize,
    pub window: WindowFractions,
    pub tolerance: f64,
}

impl Default for WeylEllipticConfig {
    fn default() -> Self {
        Self { l: 8.0, radius: 1.0, npts: 4096, window: Default::default(), tolerance: 0.07 }
    }
}

/// `A = Op(diag(1,4)|ξ| + 1)`, `p = vv*` with `v = (1,1)/√2`.
pub fn elliptic_test_symbol() -> ClassicalSymbol {
    let s1 = families::abs_xi_power(1, c64::new(1.0, 0.0)).left_mul_matrix(&CMat::from_real_diag(&[1.0, 4.0]));
    let s0 = families::constant(1, CMat::identity(2));
    ClassicalSymbol::new(c64::new(1.0, 0.0), 1, 2, vec![s1, s0]).expect("consistent components")
}

pub fn elliptic_test_projection() -> CMat {
    CMat::from_fn(2, |_, _| c64::new(0.5, 0.0))
}

/// Full symbol of `A` at `ξ` without the low-frequency cutoff.
fn elliptic_full_value(a: &ClassicalSymbol, xi: &[f64]) -> Result<CMat> {
    let x = vec![0.0; xi.len()];
    let r: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = CMat::zeros(a.n());
    for c in a.components() {
        if c.degree().re > 0.0 && r == 0.0 {
            continue;
        }
        out.axpy(c64::new(1.0, 0.0), &c.value(&x, xi)?);
    }
    Ok(out)
}

/// `M_{pg} A^{−1} M_{pg}` on the 2-vector grid (dense; small grids only).
pub fn localized_inverse_full(grid: &GridSpec, g: &SpatialFn, a: &ClassicalSymbol, p: &CMat) -> Result<DiscretizedOperator> {
    let inv = DiscretizedOperator::fourier_multiplier(grid, a.n(), |xi| {
        elliptic_full_value(a, xi).and_then(|s| matrix_power(&s, c64::new(-1.0, 0.0))).unwrap_or_else(|_| CMat::zeros(a.n()))
    })?;
    let pg = DiscretizedOperator::multiplication_fn(grid, a.n(), |x| p.scale(g.scalar_value(x)))?;
    pg.compose(&inv)?.compose(&pg)
}

/// Scalar reduction `M_g (v* A^{−1} v) M_g` for `p = vv*`: same nonzero spectrum.
pub fn localized_inverse_reduced(grid: &GridSpec, g: &SpatialFn, a: &ClassicalSymbol, v: &[c64]) -> Result<DiscretizedOperator> {
    let b = DiscretizedOperator::fourier_multiplier(grid, 1, |xi| {
        let q = elliptic_full_value(a, xi)
            .and_then(|s| matrix_power(&s, c64::new(-1.0, 0.0)))
            .map(|inv| {
                let mut acc = c64::new(0.0, 0.0);
                for i in 0..v.len() {
                    for j in 0..v.len() {
                        acc += v[i].conj() * inv[(i, j)] * v[j];
                    }
                }
                acc
            })
            .unwrap_or(c64::new(f64::NAN, 0.0));
        CMat::scalar(1, q)
    })?;
    let mg = DiscretizedOperator::multiplication(grid, g)?;
    Ok(mg.compose(&b)?.compose(&mg)?.with_order_hint(-a.order().re))
}

pub fn weyl_elliptic(cfg: &WeylEllipticConfig) -> Result<Report> {
    let a = elliptic_test_symbol();
    let p = elliptic_test_projection();
    let g = SpatialFn::bump(vec![0.0], cfg.radius);
    let pred = predictors::expected_weyl_localized(&a, &g, &p)?;
    let grid = GridSpec::new(1, cfg.l, cfg.npts)?;
    grid.check_support(g.support().expect("bump support"))?;
    let v = [c64::new(0.5f64.sqrt(), 0.0); 2];
    let op = localized_inverse_reduced(&grid, &g, &a, &v)?;
    let (est, svf) = measure_weyl(&op, 1.0, 1, &cfg.window)?;
    let mut r = Report::new(ExperimentKind::WeylElliptic, pred.value, est.limit, cfg.tolerance);
    r.warn_if(&pred, "expected_weyl_localized");
    r.metric("spread", est.spread);
    r.series = Series::new(&["npts", "t", "mu", "t_mu"]);
    push_curve(&mut r.series, cfg.npts as f64, &svf, 1.0, 1, est.window);
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CzConfig {
    /// radius of the bump `f`; the torus side is twice the support diameter
    pub radius: f64,
    pub npts: usize,
    /// Riesz direction `j` (0-based)
    pub direction: usize,
    pub window: WindowFractions,
    pub tolerance: f64,
}

impl Default for CzConfig {
    fn default() -> Self {
        Self { radius: 2.0, npts: 64, direction: 0, window: Default::default(), tolerance: 0.10 }
    }
}

pub fn weyl_commutator_cz(cfg: &CzConfig) -> Result<Report> {
    let d = 2;
    if cfg.direction >= d {
        return Err(Error::Config(format!("Riesz direction {} out of range for d={d}", cfg.direction)));
    }
    let f = SpatialFn::bump(vec![0.0; d], cfg.radius);
    let phi = families::riesz_angle(d, cfg.direction);
    let pred = predictors::expected_weyl_cz(&phi, &f, d)?;
    let grid = GridSpec::new(d, 4.0 * cfg.radius, cfg.npts)?;
    let op = predictors::cz_commutator_build(&phi, &f, &grid, MultiplicationScheme::Dealiased)?;
    let (est, svf) = measure_weyl(&op, 1.0, d, &cfg.window)?;
    let mut r = Report::new(ExperimentKind::WeylCommutatorCz, pred.value, est.limit, cfg.tolerance);
    r.warn_if(&pred, "expected_weyl_cz");
    r.metric("spread", est.spread);
    r.series = Series::new(&["npts", "t", "mu", "t_mu"]);
    push_curve(&mut r.series, cfg.npts as f64, &svf, 1.0, d, est.window);
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FracConfig {
    pub d: usize,
    pub alpha: f64,
    pub l: f64,
    pub radius: f64,
    pub npts: usize,
    pub window: WindowFractions,
    pub tolerance: f64,
}

impl Default for FracConfig {
    fn default() -> Self {
        Self { d: 1, alpha: 0.5, l: 8.0, radius: 1.0, npts: 4096, window: Default::default(), tolerance: 0.10 }
    }
}

pub fn weyl_commutator_frac(cfg: &FracConfig) -> Result<Report> {
    let f = SpatialFn::bump(vec![0.0; cfg.d], cfg.radius);
    let pred = predictors::expected_weyl_frac(cfg.alpha, &f, cfg.d)?;
    let grid = GridSpec::new(cfg.d, cfg.l, cfg.npts)?;
    let op = predictors::frac_commutator_build(cfg.alpha, &f, &grid, MultiplicationScheme::Collocated)?;
    let m = 1.0 - cfg.alpha;
    let (est, svf) = measure_weyl(&op, m, cfg.d, &cfg.window)?;
    let mut r = Report::new(ExperimentKind::WeylCommutatorFrac, pred.value, est.limit, cfg.tolerance);
    r.warn_if(&pred, "expected_weyl_frac");
    r.metric("spread", est.spread);
    r.series = Series::new(&["npts", "t", "mu", "t_mu"]);
    push_curve(&mut r.series, cfg.npts as f64, &svf, m, cfg.d, est.window);
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZetaConfig {
    pub l: f64,
    pub npts: usize,
    pub radius: f64,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        Self { l: 8.0, npts: 128, radius: 1.5, samples: 8, tolerance: 0.03 }
    }
}

/// `A = 1 + |ξ|²` in d = 2 localized by a bump; three residue routes.
pub fn zeta_residue(cfg: &ZetaConfig) -> Result<Report> {
    let (d, m) = (2usize, 2.0);
    let pole = d as f64 / m;
    let phi = SpatialFn::bump(vec![0.0; d], cfg.radius);
    let grid = GridSpec::new(d, cfg.l, cfg.npts)?;
    grid.check_support(phi.support().expect("bump support"))?;
    let a = DiscretizedOperator::bessel_potential(&grid, -m);
    let oz = OperatorZeta::new(&a, &phi)?;
    let (lo, hi) = (0.5 / cfg.samples as f64, 0.5);
    let op_samples = ZetaSample::tabulate(pole, lo, hi, cfg.samples, |z| oz.value(z))?;
    let band = BandCorrection { ceiling: grid.nyquist(), m, d };
    let op_fit = extrapolate_residue(&op_samples, Some(&band))?;
    let sym = families::abs_xi_symbol(d, m);
    let sym_samples = ZetaSample::tabulate(pole, lo, hi, cfg.samples, |z| symbolic_zeta(&sym, &phi, z))?;
    let sym_fit = extrapolate_residue(&sym_samples, None)?;
    let exact = residue_at_pole(&sym, &phi)?.re;
    let (ro, rs) = (op_fit.residue.re, sym_fit.residue.re);
    let spread = [relative_error(ro, exact), relative_error(rs, exact), relative_error(ro, rs)]
        .into_iter()
        .fold(0.0, f64::max);
    let mut r = Report::new(ExperimentKind::ZetaResidue, exact, ro, cfg.tolerance);
    r.check("max pairwise disagreement", spread, Bound::AtMost, cfg.tolerance);
    r.metric("operator_residue", ro);
    r.metric("symbolic_residue", rs);
    r.metric("residue_at_pole", exact);
    r.metric("operator_fit_residual", op_fit.residual);
    r.metric("symbolic_fit_residual", sym_fit.residual);
    let mut series = Series::new(&["z", "operator_zeta", "symbolic_zeta", "resolved_fraction"]);
    for (i, z) in op_samples.z_values.iter().enumerate() {
        series.push(vec![z.re, op_samples.values[i].re, sym_samples.values[i].re, band.resolved_fraction(z.re)?]);
    }
    r.series = series;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParametrixConfig {
    pub l: f64,
    pub npts: usize,
    pub truncation: usize,
    pub ceilings: Vec<f64>,
    pub component_tolerance: f64,
    pub min_decay: f64,
}

impl Default for ParametrixConfig {
    fn default() -> Self {
        Self { l: 8.0, npts: 512, truncation: 3, ceilings: vec![4.0, 8.0, 16.0, 32.0], component_tolerance: 1e-8, min_decay: 3.0 }
    }
}

/// Scalar first-order elliptic symbol `a(x)|ξ| + 1` with `a = 1.5 + 0.5·cos(2πx/L)`.
pub fn scalar_test_symbol(l: f64) -> ClassicalSymbol {
    let a = SpatialFn::cosine(1, 1.5, 0.5, vec![2.0 * PI / l], 0.0);
    let s1 = families::abs_xi_power(1, c64::new(1.0, 0.0)).spatial_times(&a);
    let s0 = families::constant(1, CMat::identity(1));
    ClassicalSymbol::new(c64::new(1.0, 0.0), 1, 1, vec![s1, s0]).expect("consistent components")
}

const SYMBOL_PROBE_X: [f64; 4] = [-1.7, -0.4, 0.3, 1.1];

/// Largest norm of components `1..` of `b ∘ a` on the unit cosphere.
fn lower_components_norm(b: &ClassicalSymbol, a: &ClassicalSymbol, big_n: usize) -> Result<f64> {
    let c = compose_symbols(b, a, big_n)?;
    let mut worst = 0.0f64;
    for comp in c.components().iter().skip(1) {
        for x in SYMBOL_PROBE_X {
            for xi in [-1.0, 1.0] {
                worst = worst.max(comp.value(&[x], &[xi])?.norm_max());
            }
        }
    }
    Ok(worst)
}

pub fn parametrix_check(cfg: &ParametrixConfig) -> Result<Report> {
    let n = cfg.truncation;
    let scalar = scalar_test_symbol(cfg.l);
    let matrix = families::matrix_test_symbol();
    let mut comp_norm = 0.0f64;
    for sym in [&scalar, &matrix] {
        comp_norm = comp_norm.max(lower_components_norm(&parametrix(sym, n)?, sym, n)?);
    }
    let grid = GridSpec::new(1, cfg.l, cfg.npts)?;
    let b_op = quantize(&parametrix(&scalar, n)?, &grid)?;
    let a_op = quantize(&scalar, &grid)?;
    let residual = b_op.compose(&a_op)?.sub(&DiscretizedOperator::identity(&grid, 1))?;
    let mut series = Series::new(&["ceiling", "residual_norm"]);
    let mut norms = Vec::new();
    for &k in &cfg.ceilings {
        let shell = crate::quantize::frequency_band_projector(&grid, 1, 0.5 * k, k);
        let rp = residual.compose(&shell)?;
        let sv = crate::linalg::singular_values(rp.to_dense().as_ref())?;
        let top = sv.first().copied().unwrap_or(0.0);
        norms.push(top);
        series.push(vec![k, top]);
    }
    let min_ratio = norms.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let mut r = Report::new(ExperimentKind::ParametrixCheck, 0.0, comp_norm, cfg.component_tolerance);
    r.check("minimum residual decay per doubling", min_ratio, Bound::AtLeast, cfg.min_decay);
    for (k, v) in cfg.ceilings.iter().zip(&norms) {
        r.metric(format!("residual@{k}"), *v);
    }
    r.series = series;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerGroupConfig {
    pub matrices: usize,
    pub max_size: usize,
    pub truncation: usize,
    pub tolerance: f64,
}

impl Default for PowerGroupConfig {
    fn default() -> Self {
        Self { matrices: 100, max_size: 6, truncation: 3, tolerance: 1e-6 }
    }
}

/// Random Hermitian positive definite matrix with spectrum in `[0.1, 10]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let b = CMat::from_fn(n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let (_, q) = (&b + &b.adjoint()).hermitian_eigen().expect("hermitian");
    let vals: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
    &(&q * &CMat::from_real_diag(&vals)) * &q.adjoint()
}

/// Largest `‖u − v‖ / ‖ref‖` over the probe points on the unit cosphere.
fn component_gap(u: &HomogeneousComponent, v: &HomogeneousComponent, reference: &HomogeneousComponent) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in SYMBOL_PROBE_X {
        for xi in [-1.0, 1.0] {
            let a = u.value(&[x], &[xi])?;
            let b = v.value(&[x], &[xi])?;
            let s = reference.value(&[x], &[xi])?.norm_max();
            worst = worst.max((&a - &b).norm_max() / s);
        }
    }
    Ok(worst)
}

pub fn power_group_check(cfg: &PowerGroupConfig, seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = Series::new(&["index", "size", "re_z", "im_z", "relative_gap"]);
    let mut worst_matrix = 0.0f64;
    for i in 0..cfg.matrices {
        let n = rng.gen_range(2..=cfg.max_size);
        let p = random_spd(&mut rng, n);
        let z = c64::new(rng.gen_range(-2.5..-0.05), rng.gen_range(-1.0..1.0));
        let exact = matrix_power(&p, z)?;
        let quad = contour_power(&p, z, DEFAULT_CONTOUR_NODES)?;
        let gap = (&quad - &exact).norm_max() / exact.norm_max();
        worst_matrix = worst_matrix.max(gap);
        series.push(vec![i as f64, n as f64, z.re, z.im, gap]);
    }
    let sym = families::matrix_test_symbol();
    let big_n = cfg.truncation;
    let mut worst_group = 0.0f64;
    for (z, w) in [(-0.5, -0.5), (-1.3, 0.8), (2.0, -2.0)] {
        let pz = power_symbol(&sym, c64::new(z, 0.0), big_n)?;
        let pw = power_symbol(&sym, c64::new(w, 0.0), big_n)?;
        let pzw = power_symbol(&sym, c64::new(z + w, 0.0), big_n)?;
        let comp = compose_symbols(&pz.symbol, &pw.symbol, big_n)?;
        for j in 0..big_n.min(3) {
            worst_group = worst_group.max(component_gap(&comp.components()[j], &pzw.components()[j], pzw.symbol.principal())?);
        }
    }
    let inv = power_symbol(&sym, c64::new(-1.0, 0.0), big_n)?;
    let par = parametrix(&sym, big_n)?;
    let mut worst_par = 0.0f64;
    for j in 0..big_n {
        worst_par = worst_par.max(component_gap(&inv.components()[j], &par.components()[j], par.principal())?);
    }
    let square = power_symbol(&sym, c64::new(2.0, 0.0), big_n)?;
    let twice = compose_symbols(&sym, &sym, big_n)?;
    let mut worst_square = 0.0f64;
    for j in 0..big_n {
        worst_square = worst_square.max(component_gap(&square.components()[j], &twice.components()[j], twice.principal())?);
    }
    let mut r = Report::new(ExperimentKind::PowerGroupCheck, 0.0, worst_matrix, cfg.tolerance);
    r.check("symbol group law residual", worst_group, Bound::AtMost, cfg.tolerance);
    r.check("power -1 vs parametrix", worst_par, Bound::AtMost, cfg.tolerance);
    r.check("power 2 vs composition", worst_square, Bound::AtMost, cfg.tolerance);
    r.metric("matrix_gap", worst_matrix);
    r.metric("group_law_gap", worst_group);
    r.metric("parametrix_gap", worst_par);
    r.metric("square_gap", worst_square);
    r.series = series;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicrolocalConfig {
    pub l: f64,
    pub npts: usize,
    /// amplitude of the coefficient `a = 1 + c·cos(2πx₁/L)cos(2πx₂/L)`
    pub modulation: f64,
    pub radius: f64,
    /// λ range as fractions of `K²`, `K` the Nyquist frequency
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_count: usize,
    pub oracle_npts: usize,
    pub tolerance: f64,
}

impl Default for MicrolocalConfig {
    fn default() -> Self {
        Self {
            l: 8.0,
            npts: 64,
            modulation: 0.3,
            radius: 2.0,
            lambda_lo: 0.08,
            lambda_hi: 0.8,
            lambda_count: 12,
            oracle_npts: 32,
            tolerance: 0.05,
        }
    }
}

/// `a(x) = 1 + c·cos(k x₁)cos(k x₂)` with `k = 2π/L`.
pub fn modulated_coefficient(l: f64, c: f64) -> SpatialFn {
    let k = 2.0 * PI / l;
    SpatialFn::scalar_constant(2, 1.0)
        .sum(&SpatialFn::cosine(2, 0.0, 0.5 * c, vec![k, k], 0.0))
        .sum(&SpatialFn::cosine(2, 0.0, 0.5 * c, vec![k, -k], 0.0))
}

/// `A = 1 + Σ_j D_j* M_a D_j` with spectral derivatives on the full lattice.
pub fn divergence_form_operator(grid: &GridSpec, a: &SpatialFn) -> Result<DiscretizedOperator> {
    let mut out = DiscretizedOperator::identity(grid, 1);
    let ma = DiscretizedOperator::multiplication(grid, a)?;
    for j in 0..grid.d {
        let dj = DiscretizedOperator::fourier_multiplier(grid, 1, |xi| CMat::scalar(1, c64::new(0.0, xi[j])))?;
        out = out.add(&dj.adjoint().compose(&ma)?.compose(&dj)?)?;
    }
    out.with_order_hint(2.0).mark_hermitian()
}

/// Degree-0 weight `1 + ½ξ₁²/|ξ|²`.
pub fn microlocal_weight(d: usize) -> HomogeneousComponent {
    let q = families::angular_monomial(d, c64::new(0.0, 0.0), {
        let mut b = vec![0u8; d];
        b[0] = 2;
        b
    });
    q.scaled(c64::new(0.5, 0.0)).plus(&families::constant(d, CMat::identity(1))).expect("same degree")
}

fn slope_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    num / den
}

pub fn microlocal_count(cfg: &MicrolocalConfig) -> Result<Report> {
    let d = 2;
    let phi = SpatialFn::bump(vec![0.0; d], cfg.radius);
    let q = microlocal_weight(d);
    let origin = vec![0.0; d];
    let q_values = |grid: &GridSpec| {
        DiscretizedOperator::sphere_multiplier(grid, 1, |u| q.value(&origin, u).unwrap_or_else(|_| CMat::zeros(1)))
    };
    let principal = |a: &SpatialFn| ClassicalSymbol::homogeneous(families::abs_xi_power(d, c64::new(2.0, 0.0)).spatial_times(a));

    // lattice oracle: constant coefficient, where the trace is an explicit sum
    let grid0 = GridSpec::new(d, cfg.l, cfg.oracle_npts)?;
    grid0.check_support(phi.support().expect("bump support"))?;
    let one = SpatialFn::scalar_constant(d, 1.0);
    let a0 = divergence_form_operator(&grid0, &one)?;
    let counter0 = MicrolocalCounter::new(&a0, &q_values(&grid0)?, &phi)?;
    let phi_mean: f64 =
        grid0.points().iter().map(|x| phi.scalar_value(x).re).sum::<f64>() / grid0.num_points() as f64;
    let k0 = grid0.nyquist();
    let lams0 = log_grid(cfg.lambda_lo * k0 * k0, cfg.lambda_hi * k0 * k0, cfg.lambda_count);
    let mut oracle_gap = 0.0f64;
    let mut lattice = Vec::new();
    for &lam in &lams0 {
        let exact: f64 = grid0
            .frequencies()
            .iter()
            .filter(|xi| 1.0 + xi.iter().map(|v| v * v).sum::<f64>() <= lam)
            .map(|xi| {
                let r: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r == 0.0 { 0.0 } else { 1.0 + 0.5 * (xi[0] / r).powi(2) }
            })
            .sum::<f64>()
            * phi_mean;
        oracle_gap = oracle_gap.max((counter0.count(lam) - exact).abs() / exact.abs().max(1e-300));
        lattice.push(exact);
    }
    let pred0 = predictors::microlocal_prediction(&principal(&one), &q, &phi)?;
    let lattice_slope = slope_through_origin(&lams0, &lattice);

    let a_fn = modulated_coefficient(cfg.l, cfg.modulation);
    let pred = predictors::microlocal_prediction(&principal(&a_fn), &q, &phi)?;
    let grid = GridSpec::new(d, cfg.l, cfg.npts)?;
    let a = divergence_form_operator(&grid, &a_fn)?;
    let counter = MicrolocalCounter::new(&a, &q_values(&grid)?, &phi)?;
    let k = grid.nyquist();
    let lams = log_grid(cfg.lambda_lo * k * k, cfg.lambda_hi * k * k, cfg.lambda_count);
    let counts: Vec<f64> = lams.iter().map(|l| counter.count(*l)).collect();
    let slope = slope_through_origin(&lams, &counts);

    let mut r = Report::new(ExperimentKind::MicrolocalCount, pred.value, slope, cfg.tolerance);
    r.warn_if(&pred, "microlocal_prediction");
    r.check("counter vs lattice sum (constant coefficient)", oracle_gap, Bound::AtMost, 1e-8);
    r.check(
        "lattice slope vs prediction (constant coefficient)",
        relative_error(lattice_slope, pred0.value),
        Bound::AtMost,
        cfg.tolerance,
    );
    r.metric("lattice_slope", lattice_slope);
    r.metric("lattice_prediction", pred0.value);
    let mut series = Series::new(&["lambda", "count", "predicted_count"]);
    for (l, c) in lams.iter().zip(&counts) {
        series.push(vec![*l, *c, pred.value * l]);
    }
    r.series = series;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DosConfig {
    pub l: f64,
    pub npts: usize,
    pub amplitude: f64,
    pub radius: f64,
    pub law: CouplingLaw,
    pub samples: usize,
    /// λ range as fractions of `K²`, `K` the Nyquist frequency
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub lambda_count: usize,
    pub tolerance: f64,
    /// sample counts of the standard-error scaling study (empty: skip)
    pub stderr_samples: Vec<usize>,
    pub stderr_factor: f64,
}

impl Default for DosConfig {
    fn default() -> Self {
        Self {
            l: 64.0,
            npts: 512,
            amplitude: 20.0,
            radius: 0.45,
            law: CouplingLaw::Rademacher,
            samples: 64,
            lambda_lo: 0.08,
            lambda_hi: 0.8,
            lambda_count: 10,
            tolerance: 0.10,
            stderr_samples: vec![16, 64, 256],
            stderr_factor: 1.5,
        }
    }
}

/// `A = J² + M_V` for a potential sampled on the grid.
pub fn schrodinger_builder(grid: &GridSpec) -> impl Fn(&[f64]) -> Result<DiscretizedOperator> + Sync + use<> {
    let j2 = DiscretizedOperator::bessel_potential(grid, -2.0);
    let grid = grid.clone();
    move |v: &[f64]| {
        let blocks = v.iter().map(|x| CMat::scalar(1, c64::new(*x, 0.0))).collect();
        j2.add(&DiscretizedOperator::multiplication_blocks(&grid, 1, blocks)?)?.mark_hermitian()
    }
}

pub fn dos_random(cfg: &DosConfig, seed: u64) -> Result<Report> {
    let grid = GridSpec::new(1, cfg.l, cfg.npts)?;
    let profile = SpatialFn::bump(vec![0.0], cfg.radius);
    let builder = schrodinger_builder(&grid);
    let k = grid.nyquist();
    let lams = log_grid(cfg.lambda_lo * k * k, cfg.lambda_hi * k * k, cfg.lambda_count);
    let model = RandomModel::new(&grid, &profile, cfg.law, cfg.amplitude, cfg.samples, seed)?;
    let est = predictors::dos_estimate(&model, &builder, &lams)?;
    let sym = families::abs_xi_symbol(1, 2.0);
    let mut worst = 0.0f64;
    let mut ratio_sum = 0.0;
    let mut series = Series::new(&["lambda", "dos", "stderr", "predicted"]);
    for p in &est.points {
        let pred = predictors::dos_prediction(&sym, p.lambda)?;
        worst = worst.max(relative_error(p.mean, pred));
        ratio_sum += p.mean / p.lambda.sqrt();
        series.push(vec![p.lambda, p.mean, p.stderr, pred]);
    }
    let coefficient = predictors::dos_prediction(&sym, 1.0)?;
    let mut r = Report::new(ExperimentKind::DosRandom, coefficient, ratio_sum / est.points.len() as f64, cfg.tolerance);
    r.check("worst relative error over the λ grid", worst, Bound::AtMost, cfg.tolerance);
    r.metric("samples_used", est.samples_used as f64);
    for (s, msg) in &est.skipped {
        r.warnings.push(format!("sample {s} skipped: {msg}"));
    }
    if cfg.stderr_samples.len() >= 2 {
        let mut means = Vec::new();
        for &s in &cfg.stderr_samples {
            let m = RandomModel::new(&grid, &profile, cfg.law, cfg.amplitude, s, seed)?;
            let e = predictors::dos_estimate(&m, &builder, &lams)?;
            let mean = e.points.iter().map(|p| p.stderr).sum::<f64>() / e.points.len() as f64;
            r.metric(format!("mean_stderr@{s}"), mean);
            means.push((s as f64, mean));
        }
        let worst_factor = means
            .windows(2)
            .map(|w| {
                let observed = w[0].1 / w[1].1;
                let expected = (w[1].0 / w[0].0).sqrt();
                (observed / expected).max(expected / observed)
            })
            .fold(1.0, f64::max);
        r.check("stderr scaling factor vs S^-1/2", worst_factor, Bound::AtMost, cfg.stderr_factor);
    }
    r.series = series;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DixmierConfig {
    pub l: f64,
    pub npts: usize,
    pub radius: f64,
    pub width: f64,
    /// `g` is scaled so that the predicted value equals this target
    pub target_value: f64,
    pub fraction: f64,
    pub drift_range: (f64, f64),
    pub tolerance: f64,
    pub drift_tolerance: f64,
}

impl Default for DixmierConfig {
    fn default() -> Self {
        Self {
            l: 8.0,
            npts: 64,
            radius: 1.5,
            width: 0.5,
            target_value: 1.0,
            fraction: 0.3,
            drift_range: (0.2, 0.4),
            tolerance: 0.10,
            drift_tolerance: 0.03,
        }
    }
}

/// `M_g J^{−2} M_g` in d = 2.
pub fn dixmier_trace(cfg: &DixmierConfig) -> Result<Report> {
    let d = 2;
    positive("target_value", cfg.target_value)?;
    let g0 = SpatialFn::plateau(vec![0.0; d], cfg.radius, cfg.width);
    let sym = families::abs_xi_symbol(d, -2.0);
    let base = predictors::expected_dixmier(&sym, &g0)?;
    let g = g0.scaled(c64::new((cfg.target_value / base.value).sqrt(), 0.0));
    let pred = predictors::expected_dixmier(&sym, &g)?;
    let grid = GridSpec::new(d, cfg.l, cfg.npts)?;
    grid.check_support(g.support().expect("plateau support"))?;
    let mg = DiscretizedOperator::multiplication(&grid, &g)?;
    let op = mg.compose(&DiscretizedOperator::bessel_potential(&grid, 2.0))?.compose(&mg)?.mark_hermitian()?;
    let svf = SingularValueFunction::from_operator(&op)?;
    let w = svf.effective_weight(NULL_THRESHOLD);
    let value = dixmier_log_average(&svf, cfg.fraction * w)?;
    let mut series = Series::new(&["n", "log_average"]);
    let (a, b) = cfg.drift_range;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=16 {
        let frac = a + (b - a) * i as f64 / 16.0;
        let v = dixmier_log_average(&svf, frac * w)?;
        lo = lo.min(v);
        hi = hi.max(v);
        series.push(vec![frac * w, v]);
    }
    let mut r = Report::new(ExperimentKind::DixmierTrace, pred.value, value, cfg.tolerance);
    r.warn_if(&pred, "expected_dixmier");
    r.check("drift over the N range", (hi - lo) / value.abs(), Bound::AtMost, cfg.drift_tolerance);
    r.metric("effective_weight", w);
    r.series = series;
    Ok(r)
}

use proptest::prelude::*;
use weylab::quantize::{frequency_band_projector, quantize, DiscretizedOperator, GridSpec};
use weylab::quadrature::BoxDomain;
use weylab::spatial::SpatialFn;
use weylab::symbols::{adjoint_symbol, compose_symbols, families, ClassicalSymbol};
use weylab::{c64, CMat};

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

fn grid() -> GridSpec {
    GridSpec::new(1, 8.0, 256).unwrap()
}

/// `|ξ|^{1/2}`: every term of the composition expansion is nonzero.
fn half_derivative() -> ClassicalSymbol {
    families::abs_xi_symbol(1, 0.5)
}

/// `f(x)|ξ|^{1/2} + i f(x)|ξ|^{−1/2}` with a bump `f` supported in `[−2, 2]`.
fn localized() -> ClassicalSymbol {
    let f = SpatialFn::bump(vec![0.0], 2.0);
    let s0 = families::abs_xi_power(1, c(0.5)).spatial_times(&f);
    let s1 = families::abs_xi_power(1, c(-0.5)).spatial_times(&f).scaled(c64::new(0.0, 1.0));
    ClassicalSymbol::new(c(0.5), 1, 1, vec![s0, s1]).unwrap().with_support(BoxDomain::cube(1, 2.0))
}

/// `‖P(X − Y)P‖ / ‖PYP‖` with `P` the projection on `K/4 ≤ |ξ| ≤ K/2`, `K` the Nyquist
/// frequency. Below the band the expansion is only asymptotic: at `|ξ| ≈ 2` the
/// pointwise error stops improving after two terms.
fn band_residual(x: &DiscretizedOperator, y: &DiscretizedOperator) -> f64 {
    let g = x.grid().clone();
    let p = frequency_band_projector(&g, x.n(), 0.25 * g.nyquist(), 0.5 * g.nyquist());
    let diff = p.compose(&x.sub(y).unwrap()).unwrap().compose(&p).unwrap();
    let reference = p.compose(y).unwrap().compose(&p).unwrap();
    diff.norm_fro() / reference.norm_fro()
}

fn decreasing(r: &[f64]) -> bool {
    r.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn composition_residual_decreases_with_truncation() {
    let g = grid();
    let b = half_derivative();
    let a = localized();
    let product = quantize(&b, &g).unwrap().compose(&quantize(&a, &g).unwrap()).unwrap();
    let residuals: Vec<f64> =
        (1..=4).map(|n| band_residual(&quantize(&compose_symbols(&b, &a, n).unwrap(), &g).unwrap(), &product)).collect();
    assert!(decreasing(&residuals), "{residuals:?}");
}

#[test]
fn adjoint_residual_decreases_with_truncation() {
    let g = grid();
    let a = localized();
    let exact = quantize(&a, &g).unwrap().adjoint();
    let residuals: Vec<f64> =
        (1..=4).map(|n| band_residual(&quantize(&adjoint_symbol(&a, n).unwrap(), &g).unwrap(), &exact)).collect();
    assert!(decreasing(&residuals), "{residuals:?}");
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    #[test]
    fn pure_waves_are_multiplied_by_the_symbol(k in 0usize..64, v0 in -1.0..1.0f64, v1 in -1.0..1.0f64) {
        let g = GridSpec::new(1, 8.0, 64).unwrap();
        let sym = families::matrix_test_symbol();
        let op = quantize(&sym, &g).unwrap();
        let xi = g.frequency(k);
        let v = [c(v0), c64::new(0.0, v1)];
        let mut u = Vec::with_capacity(2 * g.num_points());
        for x in g.points() {
            let e = c64::from_polar(1.0, xi[0] * x[0]);
            u.extend(v.iter().map(|vi| vi * e));
        }
        let out = op.apply(&u).unwrap();
        for (j, x) in g.points().iter().enumerate().step_by(5) {
            let s = sym.evaluate(x, &xi).unwrap();
            let e = c64::from_polar(1.0, xi[0] * x[0]);
            for r in 0..2 {
                let expected = (s[(r, 0)] * v[0] + s[(r, 1)] * v[1]) * e;
                prop_assert!((out[2 * j + r] - expected).norm() < 1e-10 * (1.0 + expected.norm()));
            }
        }
    }

    #[test]
    fn quantization_is_linear(alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let g = GridSpec::new(1, 8.0, 32).unwrap();
        let s = families::matrix_test_symbol();
        let t = ClassicalSymbol::new(
            c(1.0),
            1,
            2,
            vec![
                families::abs_xi_power(1, c(1.0)).left_mul_matrix(&CMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])),
                families::constant(1, CMat::identity(2)),
            ],
        )
        .unwrap();
        let combo = ClassicalSymbol::new(
            c(1.0),
            1,
            2,
            s.components().iter().zip(t.components()).map(|(a, b)| a.scaled(c(alpha)).plus(&b.scaled(c(beta))).unwrap()).collect(),
        )
        .unwrap();
        let lhs = quantize(&combo, &g).unwrap();
        let rhs = quantize(&s, &g).unwrap().scale(c(alpha)).add(&quantize(&t, &g).unwrap().scale(c(beta))).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm_fro() <= 1e-12 * (1.0 + lhs.norm_fro()));
    }
}

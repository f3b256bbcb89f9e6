use proptest::prelude::*;
use weylab::elliptic::{check_ellipticity, parametrix, resolvent_decay_constant, resolvent_symbols};
use weylab::powers::{contour_power, matrix_power, power_symbol, DEFAULT_CONTOUR_NODES};
use weylab::spatial::SpatialFn;
use weylab::symbols::{adjoint_symbol, compose_symbols, families, ClassicalSymbol, HomogeneousComponent};
use weylab::{c64, CMat};

fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// Order-1 scalar symbol in d = 2 with x-dependent principal and subprincipal parts.
fn scalar_2d(a: f64, b: f64, k: [f64; 2]) -> ClassicalSymbol {
    let coef = SpatialFn::cosine(2, 1.5, a, vec![k[0], k[1]], 0.3);
    let lower = SpatialFn::cosine(2, 0.2, b, vec![k[1], -k[0]], -0.7).scaled(c64::new(0.0, 1.0));
    let s1 = families::abs_xi_power(2, c(1.0)).spatial_times(&coef);
    let s0 = families::riesz_angle(2, 0).spatial_times(&lower);
    ClassicalSymbol::new(c(1.0), 2, 1, vec![s1, s0]).unwrap()
}

fn rel_gap(u: &CMat, v: &CMat) -> f64 {
    (u - v).norm_max() / u.norm_max().max(v.norm_max()).max(1.0)
}

fn component_gap(a: &ClassicalSymbol, b: &ClassicalSymbol, j: usize, x: &[f64], xi: &[f64]) -> f64 {
    let zero = CMat::zeros(a.n());
    let u = a.component(j).map(|c| c.value(x, xi).unwrap()).unwrap_or_else(|| zero.clone());
    let v = b.component(j).map(|c| c.value(x, xi).unwrap()).unwrap_or(zero);
    rel_gap(&u, &v)
}

fn point_2d() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.0..std::f64::consts::TAU, 0.5..4.0f64)
        .prop_map(|(x1, x2, th, r)| (vec![x1, x2], vec![r * th.cos(), r * th.sin()]))
}

fn point_1d() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (-3.0..3.0f64, prop::bool::ANY, 0.5..4.0f64).prop_map(|(x, s, r)| (vec![x], vec![if s { r } else { -r }]))
}

fn euler_ok(comps: &[HomogeneousComponent], x: &[f64], xi: &[f64], tol: f64) {
    for (j, comp) in comps.iter().enumerate() {
        let e = comp.euler_defect(x, xi).unwrap();
        assert!(e < tol, "component {j} (degree {}): Euler defect {e}", comp.degree());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn double_adjoint_returns_the_symbol((x, xi) in point_1d()) {
        let a = families::matrix_test_symbol();
        let big_n = 3;
        let aa = adjoint_symbol(&adjoint_symbol(&a, big_n).unwrap(), big_n).unwrap();
        for j in 0..big_n {
            let g = component_gap(&a, &aa, j, &x, &xi);
            prop_assert!(g < 1e-8, "component {j}: {g}");
        }
    }

    #[test]
    fn composition_is_associative((x, xi) in point_2d(), a in 0.1..0.6f64, k in 0.3..1.5f64) {
        let s1 = scalar_2d(a, 0.3, [k, 0.5]);
        let s2 = scalar_2d(0.4, -0.2, [0.7, -k]);
        let s3 = scalar_2d(-a, 0.5, [1.1, 0.2]);
        let big_n = 3;
        let left = compose_symbols(&compose_symbols(&s3, &s2, big_n).unwrap(), &s1, big_n).unwrap();
        let right = compose_symbols(&s3, &compose_symbols(&s2, &s1, big_n).unwrap(), big_n).unwrap();
        for j in 0..big_n {
            let g = component_gap(&left, &right, j, &x, &xi);
            prop_assert!(g < 1e-8, "component {j}: {g}");
        }
    }

    #[test]
    fn produced_components_are_homogeneous((x, xi) in point_2d()) {
        let s = scalar_2d(0.4, 0.3, [0.8, 0.5]);
        let t = scalar_2d(-0.3, 0.1, [0.2, 1.0]);
        euler_ok(compose_symbols(&t, &s, 3).unwrap().components(), &x, &xi, 1e-8);
        euler_ok(adjoint_symbol(&s, 3).unwrap().components(), &x, &xi, 1e-8);
        euler_ok(parametrix(&s, 3).unwrap().components(), &x, &xi, 1e-8);
    }

    #[test]
    fn matrix_power_components_are_homogeneous((x, xi) in point_1d()) {
        // contour quadrature limits the lower components to about 1e-8 relative
        let s = families::matrix_test_symbol();
        euler_ok(power_symbol(&s, c(-0.5), 3).unwrap().components(), &x, &xi, 1e-6);
        euler_ok(power_symbol(&s, c(1.5), 2).unwrap().components(), &x, &xi, 1e-6);
    }

    #[test]
    fn parametrix_is_two_sided((x, xi) in point_1d()) {
        let s = families::matrix_test_symbol();
        let big_n = 4;
        let b = parametrix(&s, big_n).unwrap();
        for prod in [compose_symbols(&b, &s, big_n).unwrap(), compose_symbols(&s, &b, big_n).unwrap()] {
            let p0 = prod.components()[0].value(&x, &xi).unwrap();
            prop_assert!(rel_gap(&p0, &CMat::identity(2)) < 1e-10);
            for j in 1..big_n {
                let r = prod.components()[j].value(&x, &xi).unwrap().norm_max();
                prop_assert!(r < 1e-6, "degree -{j}: {r}");
            }
        }
    }

    #[test]
    fn resolvent_terms_are_jointly_homogeneous(
        (x, xi) in point_1d(),
        t in 0.3..5.0f64,
        s in 0.1..20.0f64,
        theta in -0.5..0.5f64,
    ) {
        let sym = families::matrix_test_symbol();
        let m = sym.order().re;
        let lambda = c64::from_polar(s, std::f64::consts::PI + theta);
        let base = resolvent_symbols(&sym, lambda, 3).unwrap().values(&x, &xi).unwrap();
        let xi_t: Vec<f64> = xi.iter().map(|v| t * v).collect();
        let scaled = resolvent_symbols(&sym, lambda * t.powf(m), 3).unwrap().values(&x, &xi_t).unwrap();
        for (j, (u, v)) in base.iter().zip(&scaled).enumerate() {
            let expected = u.scale_real(t.powf(-m - j as f64));
            let err = (&expected - v).norm_max() / expected.norm_max().max(1e-300);
            prop_assert!(err < 1e-8 || expected.norm_max() < 1e-14, "term {j}: {err}");
        }
    }

    #[test]
    fn contour_power_matches_spectral_power(seed in 0u64..u64::MAX, re in -2.5..-0.05f64, im in -1.0..1.0f64) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = weylab::experiments::random_spd(&mut rng, 4);
        let z = c64::new(re, im);
        let exact = matrix_power(&p, z).unwrap();
        let quad = contour_power(&p, z, DEFAULT_CONTOUR_NODES).unwrap();
        prop_assert!((&quad - &exact).norm_max() <= 1e-6 * exact.norm_max());
    }
}

#[test]
fn x_independent_composition_is_pointwise_product() {
    let m1 = CMat::from_real_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
    let m2 = CMat::from_rows(&[&[c(0.0), c64::new(0.0, 1.0)], &[c(1.0), c(0.3)]]);
    let m3 = CMat::from_real_rows(&[&[1.0, -1.0], &[0.0, 3.0]]);
    let m4 = CMat::from_real_rows(&[&[0.2, 0.0], &[0.7, -0.4]]);
    let b = ClassicalSymbol::new(
        c(1.0),
        2,
        2,
        vec![families::abs_xi_power(2, c(1.0)).left_mul_matrix(&m1), families::riesz_angle(2, 1).left_mul_matrix(&m2)],
    )
    .unwrap();
    let a = ClassicalSymbol::new(
        c(0.5),
        2,
        2,
        vec![families::abs_xi_power(2, c(0.5)).left_mul_matrix(&m3), families::abs_xi_power(2, c(-0.5)).left_mul_matrix(&m4)],
    )
    .unwrap();
    let prod = compose_symbols(&b, &a, 4).unwrap();
    for xi in [[1.0, 0.0], [-0.3, 2.0], [0.7, -0.7]] {
        let bv: Vec<CMat> = b.components().iter().map(|c| c.value(&[0.0, 0.0], &xi).unwrap()).collect();
        let av: Vec<CMat> = a.components().iter().map(|c| c.value(&[0.0, 0.0], &xi).unwrap()).collect();
        let expected = [
            &bv[0] * &av[0],
            &(&bv[0] * &av[1]) + &(&bv[1] * &av[0]),
            &bv[1] * &av[1],
            CMat::zeros(2),
        ];
        for (j, e) in expected.iter().enumerate() {
            let got = prod.components()[j].value(&[1.3, -0.4], &xi).unwrap();
            assert!((&got - e).norm_max() <= 1e-14 * e.norm_max().max(1.0), "component {j}");
        }
    }
}

fn resolvent_samples(r_max: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..16).map(|i| vec![-3.0 + 0.4 * i as f64]).collect();
    let xis: Vec<Vec<f64>> = weylab::spectral::log_grid(1.0, r_max, 9).into_iter().flat_map(|r| [vec![r], vec![-r]]).collect();
    let ss = weylab::spectral::log_grid(1e-2, r_max, 25);
    (xs, xis, ss)
}

#[test]
fn resolvent_decay_is_bounded_by_the_ellipticity_constant() {
    let sym = families::matrix_test_symbol();
    let report = check_ellipticity(&sym, 64, 64).unwrap();
    for r_max in [1e2, 1e4] {
        let (xs, xis, ss) = resolvent_samples(r_max);
        let big_c = weylab::elliptic::resolvent_joint_decay_constant(&sym, &xs, &xis, &ss).unwrap();
        assert!(big_c <= 10.0 * report.constant_c, "{big_c} vs {}", report.constant_c);
    }
}

#[test]
fn product_weight_resolvent_bound_grows_with_the_sample_range() {
    // at |ξ|^m ≈ |λ| = R the product weight picks up a factor ≈ R/2
    let sym = families::matrix_test_symbol();
    let constants: Vec<f64> = [1e1, 1e2, 1e3]
        .iter()
        .map(|&r| {
            let (xs, xis, ss) = resolvent_samples(r);
            resolvent_decay_constant(&sym, &xs, &xis, &ss).unwrap()
        })
        .collect();
    assert!(constants[1] > 5.0 * constants[0] && constants[2] > 5.0 * constants[1], "{constants:?}");
}

#[test]
fn integer_powers_match_composition_and_parametrix() {
    let sym = families::matrix_test_symbol();
    let big_n = 3;
    let square = power_symbol(&sym, c(2.0), big_n).unwrap();
    let twice = compose_symbols(&sym, &sym, big_n).unwrap();
    let inverse = power_symbol(&sym, c(-1.0), big_n).unwrap();
    let par = parametrix(&sym, big_n).unwrap();
    for x in [-1.0, 0.2, 2.5] {
        for xi in [1.0, -1.0] {
            for j in 0..big_n {
                assert!(component_gap(&square.symbol, &twice, j, &[x], &[xi]) < 1e-6);
                assert!(component_gap(&inverse.symbol, &par, j, &[x], &[xi]) < 1e-6);
            }
        }
    }
}

#[test]
fn symbol_group_law() {
    let sym = families::matrix_test_symbol();
    let big_n = 3;
    for (z, w) in [(-0.5, -0.5), (-1.3, 0.8), (2.0, -2.0)] {
        let pz = power_symbol(&sym, c(z), big_n).unwrap();
        let pw = power_symbol(&sym, c(w), big_n).unwrap();
        let pzw = power_symbol(&sym, c(z + w), big_n).unwrap();
        let comp = compose_symbols(&pz.symbol, &pw.symbol, big_n).unwrap();
        for x in [-2.0, 0.4, 1.7] {
            for xi in [1.0, -1.0] {
                for j in 0..big_n {
                    let g = component_gap(&comp, &pzw.symbol, j, &[x], &[xi]);
                    assert!(g < 1e-6, "(z, w) = ({z}, {w}), component {j}: {g}");
                }
            }
        }
    }
}

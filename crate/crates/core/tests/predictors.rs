use proptest::prelude::*;
use weylab::c64;
use weylab::experiments::schrodinger_builder;
use weylab::jet::MatJet;
use weylab::predictors::{
    cz_commutator_build, dos_estimate, expected_weyl, expected_weyl_cz, expected_weyl_frac, frac_commutator_build,
    shift_couplings, CouplingLaw, RandomModel,
};
use weylab::quadrature::BoxDomain;
use weylab::quantize::{DiscretizedOperator, GridSpec, MultiplicationScheme};
use weylab::spatial::SpatialFn;
use weylab::symbols::families;

/// The constant 1 carrying a support box, so the phase-space integrals have a domain.
fn flat(d: usize) -> SpatialFn {
    SpatialFn::new(d, 1, Some(BoxDomain::cube(d, 1.0)), "one", |v| {
        Ok(MatJet::scalar_constant(v[0].nv(), v[0].order(), 1, c64::new(1.0, 0.0)))
    })
}

/// `f(x/r)` for a fixed non-radial profile `f` on the line.
fn profile(r: f64) -> SpatialFn {
    SpatialFn::bump(vec![0.0], r).product(&SpatialFn::cosine(1, 1.5, 0.5, vec![1.0 / r], 0.0))
}

/// The same in the plane.
fn profile_2d(r: f64) -> SpatialFn {
    SpatialFn::bump(vec![0.0, 0.0], r).product(&SpatialFn::cosine(2, 1.5, 0.5, vec![0.0, 1.0 / r], 0.0))
}

fn max_entry(op: &DiscretizedOperator) -> f64 {
    let m = op.to_dense();
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    #[test]
    fn random_potential_is_shift_equivariant(k0 in -4i64..=4, k1 in -4i64..=4, sample in 0usize..8, uniform in any::<bool>()) {
        let g = GridSpec::new(2, 4.0, 16).unwrap();
        let law = if uniform { CouplingLaw::Uniform } else { CouplingLaw::Rademacher };
        let model = RandomModel::new(&g, &SpatialFn::bump(vec![0.0, 0.0], 0.45), law, 0.7, 8, 3).unwrap();
        let eps = model.couplings(sample);
        let v = model.potential(&eps).unwrap();
        let shifted = model.potential(&shift_couplings(&eps, 4, 2, &[k0, k1])).unwrap();
        // four grid points per unit cell: V(x + k) sits at index i + 4k on each axis
        let wrap = |i: usize, k: i64| (i as i64 + 4 * k).rem_euclid(16) as usize;
        for i0 in 0..16 {
            for i1 in 0..16 {
                prop_assert_eq!(v[wrap(i0, k0) * 16 + wrap(i1, k1)], shifted[i0 * 16 + i1]);
            }
        }
    }

    /// `f(x/r)` scales the Weyl constant of an order −m symbol by `r^m`.
    #[test]
    fn weyl_constant_scales_under_dilation(r in 0.5..3.0f64, m in 0.3..1.9f64) {
        let sym = families::abs_xi_symbol(1, -m);
        let base = expected_weyl(&sym, &profile(1.0), m, 1).unwrap().value;
        let dilated = expected_weyl(&sym, &profile(r), m, 1).unwrap().value;
        prop_assert!(rel(dilated, base * r.powf(m)) <= 1e-6, "{} vs {}", dilated, base * r.powf(m));
    }

    #[test]
    fn frac_constant_scales_under_dilation(r in 0.5..3.0f64, alpha in 0.05..0.95f64) {
        let base = expected_weyl_frac(alpha, &profile(1.0), 1).unwrap().value;
        let dilated = expected_weyl_frac(alpha, &profile(r), 1).unwrap().value;
        prop_assert!(rel(dilated, base * r.powf(-alpha)) <= 1e-6);
    }
}

#[test]
fn cz_constant_is_dilation_invariant() {
    let phi = families::riesz_angle(2, 0);
    let base = expected_weyl_cz(&phi, &profile_2d(1.0), 2).unwrap().value;
    let dilated = expected_weyl_cz(&phi, &profile_2d(2.5), 2).unwrap().value;
    assert!(rel(dilated, base) <= 1e-6, "{dilated} vs {base}");
}

#[test]
fn constant_functions_commute_and_predict_zero() {
    let g = GridSpec::new(2, 4.0, 16).unwrap();
    let one = flat(2);
    let phi = families::riesz_angle(2, 1);
    let cz = cz_commutator_build(&phi, &one, &g, MultiplicationScheme::default()).unwrap();
    assert!(max_entry(&cz) <= 1e-12);
    let frac = frac_commutator_build(0.5, &one, &g, MultiplicationScheme::default()).unwrap();
    assert!(max_entry(&frac) <= 1e-12);
    assert_eq!(expected_weyl_cz(&phi, &one, 2).unwrap().value, 0.0);
    assert_eq!(expected_weyl_frac(-0.5, &one, 2).unwrap().value, 0.0);
}

#[test]
fn density_of_states_does_not_depend_on_the_thread_count() {
    let g = GridSpec::new(1, 16.0, 128).unwrap();
    let model = RandomModel::new(&g, &SpatialFn::bump(vec![0.0], 0.45), CouplingLaw::Uniform, 2.0, 12, 5).unwrap();
    let builder = schrodinger_builder(&g);
    let lambdas = [1.0, 4.0, 16.0];
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&dos_estimate(&model, &builder, &lambdas).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(2));
}

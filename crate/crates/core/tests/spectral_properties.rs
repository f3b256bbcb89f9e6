use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylab::c64;
use weylab::linalg::{hermitian_eigen, singular_values};
use weylab::quantize::{DiscretizedOperator, GridSpec};
use weylab::spectral::{default_window, tauberian_duality_check, tauberian_levels, weyl_limit, SingularValueFunction};

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Mat<c64> {
    let b = random_matrix(rng, n);
    let h = Mat::from_fn(n, n, |i, j| b[(i, j)] + b[(j, i)].conj());
    hermitian_eigen(h.as_ref()).unwrap().1
}

/// `U diag(values) V*` with Haar-like random unitaries.
fn with_singular_values(rng: &mut ChaCha8Rng, values: &[f64]) -> Mat<c64> {
    let n = values.len();
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let d = Mat::from_fn(n, n, |i, j| if i == j { c64::new(values[i], 0.0) } else { c64::new(0.0, 0.0) });
    &(&u * &d) * v.adjoint()
}

fn svf(m: &Mat<c64>) -> SingularValueFunction {
    SingularValueFunction::with_unit_weights(singular_values(m.as_ref()).unwrap()).unwrap()
}

fn power_tail(n: usize, c: f64, p: f64) -> Vec<f64> {
    (1..=n).map(|k| c * (k as f64).powf(-1.0 / p)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn svf_is_right_continuous(pairs in prop::collection::vec((0.0..10.0f64, 0.1..3.0f64), 1..40)) {
        let s = SingularValueFunction::new(pairs).unwrap();
        let mut cum = 0.0;
        for (v, w) in s.values().iter().zip(s.weights()) {
            cum += w;
            let eps = 1e-9 * cum;
            prop_assert_eq!(s.mu(cum), s.mu(cum + eps));
            prop_assert_eq!(s.mu(cum - eps), *v);
            prop_assert_eq!(s.distribution(*v), s.distribution(v + 1e-9 * (1.0 + v)));
        }
        prop_assert_eq!(s.mu(s.total_weight()), 0.0);
    }

    #[test]
    fn svf_is_unitarily_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, 24);
        let u = random_unitary(&mut rng, 24);
        let v = random_unitary(&mut rng, 24);
        let uav = &(&u * &a) * &v;
        let (s1, s2) = (svf(&a), svf(&uav));
        let top = s1.values()[0];
        for (x, y) in s1.values().iter().zip(s2.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * top);
        }
    }

    #[test]
    fn svf_is_submultiplicative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 32;
        let a = random_matrix(&mut rng, n);
        let b = with_singular_values(&mut rng, &power_tail(n, 2.0, 1.0));
        let (sa, sb, sab) = (svf(&a), svf(&b), svf(&(&a * &b)));
        for _ in 0..100 {
            let t = rng.gen_range(0.0..n as f64 / 2.0);
            let s = rng.gen_range(0.0..n as f64 / 2.0);
            let bound = sa.mu(t) * sb.mu(s);
            prop_assert!(sab.mu(t + s) <= bound * (1.0 + 1e-12), "t={} s={}", t, s);
        }
    }
}

/// `B` decays like `k^{-2}`, strictly faster than `A`. Its amplitude is kept below the
/// window values of `A`: large top singular values of `B` shift indices by `O(r/t)`.
#[test]
fn faster_decaying_perturbation_keeps_the_weyl_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 512;
    let a = with_singular_values(&mut rng, &power_tail(n, 1.5, 1.0));
    let b = with_singular_values(&mut rng, &power_tail(n, 0.05, 0.5));
    let sa = svf(&a);
    let window = default_window(&sa);
    let base = weyl_limit(&sa, 1.0, 1, window).unwrap();
    let perturbed = weyl_limit(&svf(&(&a + &b)), 1.0, 1, window).unwrap();
    let spread = base.spread.max(perturbed.spread);
    assert!((perturbed.limit - base.limit).abs() <= 2.0 * spread, "{} vs {} (spread {spread})", perturbed.limit, base.limit);
}

#[test]
fn weyl_limit_moves_continuously_under_small_weak_norm_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 512;
    let a = with_singular_values(&mut rng, &power_tail(n, 1.5, 1.0));
    let e = with_singular_values(&mut rng, &power_tail(n, 1.0, 1.0));
    let sa = svf(&a);
    let window = default_window(&sa);
    let base = weyl_limit(&sa, 1.0, 1, window).unwrap().limit;
    let mut shifts = Vec::new();
    for eps in [1e-3, 1e-2, 1e-1] {
        let m = Mat::from_fn(n, n, |i, j| a[(i, j)] + e[(i, j)] * eps);
        let shifted = weyl_limit(&svf(&m), 1.0, 1, window).unwrap().limit;
        shifts.push(((shifted - base) / eps).abs());
    }
    assert!(shifts.iter().all(|s| *s <= 4.0), "{shifts:?}");
}

#[test]
fn tauberian_duality_on_the_bessel_potential() {
    let grid = GridSpec::new(1, 8.0, 4096).unwrap();
    let s = SingularValueFunction::from_operator(&DiscretizedOperator::bessel_potential(&grid, 1.0)).unwrap();
    let levels = tauberian_levels(&s, default_window(&s), 50);
    assert!(levels.len() >= 20);
    let r = tauberian_duality_check(&s, 1.0, &levels).unwrap();
    assert!(r.max_discrepancy <= 0.02, "{}", r.max_discrepancy);
}

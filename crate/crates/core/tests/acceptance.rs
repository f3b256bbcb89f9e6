//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line each. Exits nonzero if any criterion fails.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::{Duration, Instant};
use weylab::c64;
use weylab::elliptic::parametrix;
use weylab::experiments::{DosConfig, Experiment, ExperimentKind, Report, DEFAULT_SEED};
use weylab::linalg::{hermitian_eigen, singular_values};
use weylab::quantize::{DiscretizedOperator, GridSpec};
use weylab::spectral::{default_window, tauberian_duality_check, tauberian_levels, SingularValueFunction};
use weylab::symbols::{adjoint_symbol, compose_symbols, families};

struct Outcome {
    pass: bool,
    detail: String,
}

fn experiment(kind: ExperimentKind, budget: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let report = Experiment::default_for(kind).run(DEFAULT_SEED);
    let elapsed = start.elapsed();
    match report {
        Ok(r) => {
            let on_time = budget.is_none_or(|b| elapsed <= b);
            let mut detail = format!("{} [{:.1}s", r.summary_line(), elapsed.as_secs_f64());
            if let Some(b) = budget {
                detail += &format!(", budget {}s", b.as_secs());
            }
            detail.push(']');
            for c in r.checks.iter().filter(|c| !c.pass) {
                detail += &format!("\n      {} = {:.4e} ({:?} {:.3e})", c.name, c.value, c.bound, c.threshold);
            }
            Outcome { pass: r.pass && on_time, detail }
        }
        Err(e) => Outcome { pass: false, detail: format!("{}: error: {e}", kind.name()) },
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Mat<c64> {
    let b = random_matrix(rng, n);
    let h = Mat::from_fn(n, n, |i, j| b[(i, j)] + b[(j, i)].conj());
    hermitian_eigen(h.as_ref()).unwrap().1
}

fn svf(m: &Mat<c64>) -> SingularValueFunction {
    SingularValueFunction::with_unit_weights(singular_values(m.as_ref()).unwrap()).unwrap()
}

/// Largest Euler defect over the components of the test symbol, its parametrix, square
/// and adjoint. Components that vanish up to roundoff are skipped.
fn euler_check() -> (bool, String) {
    let sym = families::matrix_test_symbol();
    let par = parametrix(&sym, 3).unwrap();
    let square = compose_symbols(&sym, &sym, 3).unwrap();
    let adj = adjoint_symbol(&sym, 3).unwrap();
    let mut worst = 0.0f64;
    for s in [&sym, &par, &square, &adj] {
        for k in s.components() {
            for (x, xi) in [(0.3, 1.7), (-1.2, -0.4), (2.5, 3.1)] {
                if k.value(&[x], &[xi]).unwrap().norm_max() > 1e-12 {
                    worst = worst.max(k.euler_defect(&[x], &[xi]).unwrap());
                }
            }
        }
    }
    (worst <= 1e-8, format!("Euler defect {worst:.2e} (≤ 1e-8)"))
}

fn svf_checks(rng: &mut ChaCha8Rng) -> (bool, String) {
    let n = 24;
    let a = random_matrix(rng, n);
    let s = svf(&a);
    let mut right_continuous = true;
    let mut cum = 0.0;
    for (v, w) in s.values().iter().zip(s.weights()) {
        cum += w;
        right_continuous &= s.mu(cum) == s.mu(cum + 1e-9 * cum) && s.mu(cum - 1e-9 * cum) == *v;
    }
    let (u, v) = (random_unitary(rng, n), random_unitary(rng, n));
    let rotated = svf(&(&(&u * &a) * &v));
    let top = s.values()[0];
    let invariance = s.values().iter().zip(rotated.values()).map(|(x, y)| (x - y).abs() / top).fold(0.0, f64::max);
    let b = random_matrix(rng, n);
    let (sb, sab) = (svf(&b), svf(&(&a * &b)));
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let t = rng.gen_range(0.0..n as f64 / 2.0);
        let r = rng.gen_range(0.0..n as f64 / 2.0);
        worst = worst.max(sab.mu(t + r) / (s.mu(t) * sb.mu(r)));
    }
    let pass = right_continuous && invariance <= 1e-10 && worst <= 1.0 + 1e-12;
    (
        pass,
        format!("right-continuous {right_continuous}, unitary invariance {invariance:.1e}, μ(t+s)/μ(t)μ(s) ≤ {worst:.4}"),
    )
}

fn tauberian_check() -> (bool, String) {
    let grid = GridSpec::new(1, 8.0, 4096).unwrap();
    let s = SingularValueFunction::from_operator(&DiscretizedOperator::bessel_potential(&grid, 1.0)).unwrap();
    let levels = tauberian_levels(&s, default_window(&s), 50);
    let r = tauberian_duality_check(&s, 1.0, &levels).unwrap();
    (r.max_discrepancy <= 0.02, format!("Tauberian discrepancy on J^-1 {:.2e} (≤ 2e-2)", r.max_discrepancy))
}

fn fingerprint(r: &Report) -> String {
    format!("{}\n{:?}\n{:?}", serde_json::to_string(r).unwrap(), r.series.columns, r.series.rows)
}

fn determinism_check() -> (bool, String) {
    let cfg = DosConfig { l: 16.0, npts: 128, samples: 8, lambda_count: 4, stderr_samples: vec![], ..Default::default() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| fingerprint(&Experiment::DosRandom(cfg.clone()).run(11).unwrap()))
    };
    let (a, b, c) = (run(1), run(2), run(2));
    let same = a == b && b == c;
    (same, format!("dos_random byte-identical across 1/2 workers and reruns: {same}"))
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let parts = [euler_check(), svf_checks(&mut rng), tauberian_check(), determinism_check()];
    let pass = parts.iter().all(|p| p.0);
    let detail = parts.iter().map(|p| format!("{} {}", if p.0 { "ok" } else { "FAILED" }, p.1)).collect::<Vec<_>>().join("; ");
    Outcome { pass, detail: format!("properties: {detail}") }
}

fn main() -> ExitCode {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("C1 Bessel Weyl limit", Box::new(move || experiment(ExperimentKind::WeylBessel, minutes(2)))),
        ("C2 elliptic matrix Weyl limit", Box::new(|| experiment(ExperimentKind::WeylElliptic, None))),
        ("C3 zeta residues", Box::new(move || experiment(ExperimentKind::ZetaResidue, minutes(5)))),
        ("C4 complex power laws", Box::new(|| experiment(ExperimentKind::PowerGroupCheck, None))),
        ("C5 parametrix residual", Box::new(|| experiment(ExperimentKind::ParametrixCheck, None))),
        ("C6 Calderón–Zygmund commutator", Box::new(move || experiment(ExperimentKind::WeylCommutatorCz, minutes(10)))),
        ("C7 fractional commutator", Box::new(|| experiment(ExperimentKind::WeylCommutatorFrac, None))),
        ("C8 Dixmier value", Box::new(|| experiment(ExperimentKind::DixmierTrace, None))),
        ("C9 microlocal counting", Box::new(|| experiment(ExperimentKind::MicrolocalCount, None))),
        ("C10 density of states", Box::new(|| experiment(ExperimentKind::DosRandom, None))),
        ("C11 property checks", Box::new(properties)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

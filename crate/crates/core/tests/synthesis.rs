mod common;

use common::criteria::*;
use common::*;
use intctrl::converter::{convert, AlphaIni, ConversionConfig};
use intctrl::numeric::schur_check;
use intctrl::stabilizer::{run_algorithm1, stabilize_proper, GammaIni, StabilizationConfig};
use intctrl::verify::{closed_loop_poly, reference_to_output};
use intctrl::{fixtures, Error, Polynomial};
use num_complex::Complex64;
use rand::Rng;

fn gamma_cfg() -> StabilizationConfig {
    StabilizationConfig {
        gamma_ini: GammaIni::Roots(fixtures::gamma_ini_roots()),
        ..StabilizationConfig::default()
    }
}

fn alpha_cfg() -> ConversionConfig {
    ConversionConfig {
        alpha0: AlphaIni::Roots(fixtures::alpha0_roots()),
        ..ConversionConfig::default()
    }
}

#[test]
fn low_order_plants_are_stabilized() {
    let s = stabilization_suite(300, 41, 3);
    assert!(s.failures.is_empty(), "{:#?}", s.failures);
}

/// Up to n = 6 a run may stop on a numerical limit, but never with a wrong
/// structural claim, and every certified run cross-checks.
#[test]
fn fuzzed_failures_are_numerical() {
    let mut g = rng(31);
    let mut passed = 0;
    for _ in 0..80 {
        let n = g.gen_range(1..=6);
        let (dp, np) = random_plant(&mut g, n);
        match run_algorithm1(&dp, &np, &StabilizationConfig::default()) {
            Ok(res) => {
                let failed = res.certificate.failed();
                assert!(failed.iter().all(|c| *c == "S2_gamma_schur"), "{failed:?}");
                assert_eq!(res.alpha.integer_deviation(), 0.0);
                assert!(res.beta.degree_or_neg() < res.alpha.degree_or_neg());
                let cl = closed_loop_poly(&res.plant.dp, &res.plant.np_full, &res.alpha, &-&res.beta);
                assert!((&cl - &res.gamma).max_abs() <= 1e-8 * cl.max_abs());
                if failed.is_empty() {
                    passed += 1;
                    assert!(schur_check(&cl, 0.0).unwrap().is_schur);
                }
            }
            Err(e) => assert!(
                matches!(
                    e,
                    Error::NumericalBreakdown { .. } | Error::IterationCap { .. } | Error::Inconsistent(_)
                ),
                "{e:?}"
            ),
        }
    }
    assert!(passed >= 70, "{passed} of 80 certified");
}

#[test]
fn gamma_degree_grows_by_n_per_step() {
    let mut g = rng(32);
    for _ in 0..60 {
        let n = g.gen_range(1..=3);
        let (dp, np) = random_plant(&mut g, n);
        let res = run_algorithm1(&dp, &np, &StabilizationConfig::default()).unwrap();
        for rec in &res.trace.records {
            assert_eq!(rec.accumulated_degree, 2 * n + (rec.k + 1) * n);
        }
        let steps = res.trace.iterations();
        assert_eq!(res.gamma.degree(), Some(2 * n + steps * n));
        assert_eq!(res.alpha.degree(), Some(n + steps * n));
    }
}

#[test]
fn per_step_invariants_hold() {
    let mut g = rng(33);
    let cfg = StabilizationConfig {
        verify_invariants: true,
        ..StabilizationConfig::default()
    };
    for _ in 0..60 {
        let n = g.gen_range(1..=3);
        let (dp, np) = random_plant(&mut g, n);
        let res = run_algorithm1(&dp, &np, &cfg).unwrap();
        for rec in &res.trace.records {
            assert!(rec.u_norm < 1.0);
            assert!(rec.invariant_residual.unwrap() <= 1e-8);
        }
    }
}

#[test]
fn exact_pendulum_reproduces_alpha() {
    let (dp, np) = fixtures::pendulum_exact();
    let res = run_algorithm1(&dp, &np, &gamma_cfg()).unwrap();
    assert!(res.certificate.pass, "{:?}", res.certificate.failed());
    assert_eq!(
        res.alpha_core(),
        Polynomial::from_descending(&fixtures::STABILIZATION_ALPHA_CORE)
    );
    assert_eq!(res.shift, fixtures::STABILIZATION_SHIFT);
}

#[test]
fn printed_pendulum_is_certified() {
    let (dp, np) = fixtures::pendulum();
    let res = run_algorithm1(&dp, &np, &gamma_cfg()).unwrap();
    assert!(res.certificate.pass, "{:?}", res.certificate.failed());
    let radius = res.certificate.condition("S2_gamma_schur").unwrap().witness;
    assert!(
        (radius - fixtures::STABILIZATION_RADIUS).abs() <= 2e-3,
        "radius {radius}"
    );
    assert_eq!(res.alpha.integer_deviation(), 0.0);
}

#[test]
fn biproper_pendulum_controller() {
    let (dp, np) = fixtures::pendulum();
    let (dc, nc, res) = stabilize_proper(&dp, &np, &Polynomial::linear(-2.0), &gamma_cfg()).unwrap();
    assert_eq!(nc.degree(), dc.degree());
    assert!(res.certificate.pass);
    let (dp_m, np_m) = (dp.monic(), np.scale(1.0 / dp.leading()));
    let cl = closed_loop_poly(&dp_m, &np_m, &dc, &nc);
    assert!((&cl - &res.gamma).max_abs() <= 1e-8 * (1.0 + cl.max_abs()));
    assert!(schur_check(&cl, 0.0).unwrap().is_schur);
}

#[test]
fn input_errors_are_typed() {
    let dp = Polynomial::from_descending(&[1.0, 1.5, -1.0]);
    let np = Polynomial::from_descending(&[1.0, -0.5]);
    assert!(matches!(
        run_algorithm1(&dp, &np, &StabilizationConfig::default()),
        Err(Error::NotCoprime { .. })
    ));
    let improper = Polynomial::from_descending(&[1.0, 0.0, 0.0, 1.0]);
    assert!(matches!(
        run_algorithm1(&dp, &improper, &StabilizationConfig::default()),
        Err(Error::Improper { .. })
    ));
    let bad_gamma = StabilizationConfig {
        gamma_ini: GammaIni::Roots(vec![Complex64::new(1.2, 0.0); 4]),
        ..StabilizationConfig::default()
    };
    let np_ok = Polynomial::from_descending(&[1.0, 2.0]);
    assert!(run_algorithm1(&dp, &np_ok, &bad_gamma).is_err());
}

#[test]
fn conversion_factorization_on_fuzzed_instances() {
    let rep = factorization_suite(80, 34);
    assert!(rep.failures.is_empty(), "{:#?}", rep.failures);
    assert!(rep.max_tf <= 1e-7, "tf mismatch {:e}", rep.max_tf);
}

#[test]
fn conversion_keeps_stable_loops_stable() {
    let mut g = rng(35);
    for _ in 0..40 {
        let n = g.gen_range(1..=4);
        let (dp, np) = random_plant(&mut g, n);
        let poles: Vec<f64> = (0..2 * n - 1).map(|_| g.gen_range(-0.7..0.7)).collect();
        let pre = fixtures::placed_controller(&dp, &np, &poles).unwrap();
        let out = convert(&dp, &np, &pre, &ConversionConfig::default()).unwrap();
        assert!(out.certificate.pass, "{:?}", out.certificate.failed());
        assert_eq!(out.controller.den.integer_deviation(), 0.0);
        let t1 = reference_to_output(&dp, &np, &pre);
        let t2 = reference_to_output(&dp, &np, &out.controller);
        assert!(intctrl::verify::tf_mismatch(&t1, &t2) <= 1e-7);
    }
}

#[test]
fn exact_pendulum_conversion_gamma() {
    let (dp, np) = fixtures::pendulum_exact();
    let out = convert(&dp, &np, &fixtures::pre_controller(), &alpha_cfg()).unwrap();
    let sol = &out.solution;
    assert_eq!(sol.trace.iterations(), fixtures::CONVERSION_ITERATIONS);
    assert_eq!(sol.shift, fixtures::CONVERSION_SHIFT);
    let core = sol.gamma.unshift(sol.shift);
    assert_eq!(core, Polynomial::from_descending(&fixtures::CONVERSION_GAMMA_CORE));
    assert!(out.certificate.condition("factorization").unwrap().pass);
    assert!(out.certificate.condition("tf_preserved").unwrap().pass);
}

#[test]
fn placed_pendulum_conversion() {
    let (dp, np) = fixtures::pendulum();
    let pre = fixtures::placed_controller(&dp, &np, &fixtures::PLACED_POLES).unwrap();
    let out = convert(&dp, &np, &pre, &ConversionConfig::default()).unwrap();
    assert!(out.certificate.pass, "{:?}", out.certificate.failed());
    let gain = out.certificate.dc_gain.unwrap();
    assert!((gain - 1.0).abs() <= 1e-6, "dc gain {gain}");
}

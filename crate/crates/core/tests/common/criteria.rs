//! Fuzzed checks shared by the property tests and the acceptance harness.
#![allow(dead_code)]

use std::time::{Duration, Instant};

use intctrl::bezout::{coprime_check, f_map};
use intctrl::converter::{convert, ConversionConfig};
use intctrl::numeric::{condition_number, schur_check};
use intctrl::poly::CoeffVector;
use intctrl::stabilizer::{run_algorithm1, StabilizationConfig};
use intctrl::target::DeltaFactors;
use intctrl::verify::{closed_loop_poly, ControllerPolys};
use intctrl::Polynomial;
use num_complex::Complex64;
use rand::Rng;

use super::*;

fn random_vector(g: &mut impl Rng, n: usize, lo: f64, hi: f64) -> CoeffVector {
    CoeffVector::new((0..n).map(|_| g.gen_range(lo..hi)).collect())
}

/// Numerator with roots of modulus in `[0.6, 1.8)` times a random gain.
fn random_numerator(g: &mut impl Rng, degree: usize) -> Polynomial {
    let gain = g.gen_range(0.5..2.0) * if g.gen_bool(0.5) { 1.0 } else { -1.0 };
    Polynomial::from_roots(&random_roots(g, degree, 0.6, 1.8)).scale(gain)
}

pub struct UpdateReport {
    pub cases: usize,
    pub max_error: f64,
}

/// `a + Δ(a) r` against `F(z^{N+n}, z^N p_a p_r)`.
pub fn update_equivalence(cases: usize, seed: u64) -> UpdateReport {
    let mut g = rng(seed);
    let mut max_error = 0.0_f64;
    for _ in 0..cases {
        let n = g.gen_range(1..=6);
        let big_n = g.gen_range(0..=4);
        let dn = g.gen_range(0..=n);
        let np = random_numerator(&mut g, dn);
        let a = random_vector(&mut g, n, -2.0, 2.0);
        let r = random_vector(&mut g, n, -0.5, 0.5);
        let delta = DeltaFactors::new(&np, n).unwrap().delta(&a);
        let next = CoeffVector::from_dvector(&(a.to_dvector() + &delta * r.to_dvector()));
        let q = (&a.to_monic_polynomial() * &r.to_monic_polynomial()).shift(big_n);
        let f = f_map(&Polynomial::monomial(big_n + n, 1.0), &q, &np, 1e-8).unwrap();
        let want = CoeffVector::from_monic_polynomial(&f.r, n, 1e-9).unwrap();
        let err = next.sub(&want).linf_norm() / (1.0 + want.linf_norm());
        max_error = max_error.max(err);
    }
    UpdateReport { cases, max_error }
}

pub const SINGULAR_CONDITION: f64 = 1e8;
pub const COPRIME_QUALITY: f64 = 1e-4;

pub struct SingularityReport {
    pub planted: usize,
    pub planted_missed: usize,
    pub coprime: usize,
    pub coprime_missed: usize,
    pub min_planted_condition: f64,
    pub max_coprime_condition: f64,
}

/// `Δ(x)` is singular exactly when `p_x` and `N_p` share a root.
pub fn singularity_classification(per_class: usize, seed: u64) -> SingularityReport {
    let mut g = rng(seed);
    let mut rep = SingularityReport {
        planted: 0,
        planted_missed: 0,
        coprime: 0,
        coprime_missed: 0,
        min_planted_condition: f64::INFINITY,
        max_coprime_condition: 0.0,
    };
    while rep.planted < per_class {
        let n = g.gen_range(2..=6);
        let complex = n >= 3 && g.gen_bool(0.4);
        let shared = if complex {
            let z = Complex64::from_polar(g.gen_range(0.6..1.6), g.gen_range(0.3..2.8));
            Polynomial::from_roots(&[z, z.conj()])
        } else {
            let s = if g.gen_bool(0.5) { 1.0 } else { -1.0 };
            Polynomial::linear(s * g.gen_range(0.6..1.6))
        };
        let k = shared.degree().unwrap();
        let dn = g.gen_range(k..=n);
        let np = &shared * &random_numerator(&mut g, dn - k);
        let px = &shared * &monic_poly(&mut g, n - k, -1.0, 1.0);
        let x = CoeffVector::from_monic_polynomial(&px, n, 1e-12).unwrap();
        let cond = condition_number(&DeltaFactors::new(&np, n).unwrap().delta(&x));
        rep.planted += 1;
        rep.min_planted_condition = rep.min_planted_condition.min(cond);
        if cond <= SINGULAR_CONDITION {
            rep.planted_missed += 1;
        }
    }
    while rep.coprime < per_class {
        let n = g.gen_range(2..=6);
        let dn = g.gen_range(1..=n);
        let np = random_numerator(&mut g, dn);
        let x = random_vector(&mut g, n, -1.5, 1.5);
        if coprime_check(&x.to_monic_polynomial(), &np, 1e-8).quality <= COPRIME_QUALITY {
            continue;
        }
        let delta = DeltaFactors::new(&np, n).unwrap().delta(&x);
        let cond = condition_number(&delta);
        let solvable = intctrl::numeric::solve_linear(&delta, &x.to_dvector()).is_ok();
        rep.coprime += 1;
        rep.max_coprime_condition = rep.max_coprime_condition.max(cond);
        if cond > SINGULAR_CONDITION || !solvable {
            rep.coprime_missed += 1;
        }
    }
    rep
}

pub struct RoucheReport {
    pub cases: usize,
    pub failures: usize,
    pub max_radius: f64,
}

/// `‖u‖₁ ≤ 0.99` implies `p_u` Schur, checked by eigenvalues and by the
/// Schur–Cohn recursion.
pub fn small_input_schur(cases: usize, seed: u64) -> RoucheReport {
    let mut g = rng(seed);
    let mut rep = RoucheReport {
        cases,
        failures: 0,
        max_radius: 0.0,
    };
    for i in 0..cases {
        let n = g.gen_range(1..=8);
        let raw = random_vector(&mut g, n, -1.0, 1.0);
        let norm = raw.l1_norm().max(1e-300);
        // every tenth case sits on the boundary ‖u‖₁ = 0.99
        let target = if i % 10 == 0 { 0.99 } else { g.gen_range(0.0..0.99) };
        let u = CoeffVector::new(raw.entries().iter().map(|v| v * target / norm).collect());
        let pu = u.to_monic_polynomial();
        let sc = schur_check(&pu, 0.0).unwrap();
        rep.max_radius = rep.max_radius.max(sc.spectral_radius);
        if !(sc.is_schur && schur_cohn(&pu)) {
            rep.failures += 1;
        }
    }
    rep
}

pub struct StabilizationSuite {
    pub cases: usize,
    pub passed: usize,
    pub failures: Vec<String>,
    pub max_residual: f64,
    pub max_iterations: usize,
    pub elapsed: Duration,
}

/// Random coprime plants through the full synthesis with certification and an
/// independent closed-loop cross-check.
pub fn stabilization_suite(cases: usize, seed: u64, n_max: usize) -> StabilizationSuite {
    let mut g = rng(seed);
    let start = Instant::now();
    let mut s = StabilizationSuite {
        cases,
        passed: 0,
        failures: vec![],
        max_residual: 0.0,
        max_iterations: 0,
        elapsed: Duration::ZERO,
    };
    for case in 0..cases {
        let n = g.gen_range(1..=n_max);
        let (dp, np) = random_plant(&mut g, n);
        match run_algorithm1(&dp, &np, &StabilizationConfig::default()) {
            Ok(res) => {
                s.max_residual = s.max_residual.max(res.certificate.residual);
                s.max_iterations = s.max_iterations.max(res.trace.iterations());
                let (dc, nc) = res.controller();
                let cl = closed_loop_poly(&res.plant.dp, &res.plant.np_full, &dc, &nc);
                let mismatch = (&cl - &res.gamma).max_abs() / cl.max_abs().max(1.0);
                let within_cap = res.trace.iterations() <= res.trace.iteration_cap;
                let gap = res.alpha.degree_or_neg() > res.beta.degree_or_neg();
                let integer = res.alpha.integer_deviation() == 0.0 && res.alpha.leading() == 1.0;
                if res.certificate.pass && mismatch <= 1e-8 && within_cap && gap && integer {
                    s.passed += 1;
                } else {
                    s.failures.push(format!(
                        "case {case} (n = {n}): failed {:?}, residual {:e}, mismatch {mismatch:e}, γ radius {:.6}, deg γ {:?}",
                        res.certificate.failed(),
                        res.certificate.residual, res.certificate.condition("S2_gamma_schur").unwrap().witness, res.gamma.degree()
                    ));
                }
            }
            Err(e) => s.failures.push(format!("case {case} (n = {n}): {e}")),
        }
    }
    s.elapsed = start.elapsed();
    s
}

pub struct FactorizationReport {
    pub cases: usize,
    pub failures: Vec<String>,
    pub max_factorization: f64,
    pub max_tf: f64,
}

/// Random plant and controller with `D_c` coprime to `N_p`.
pub fn random_conversion_instance(g: &mut impl Rng) -> (Polynomial, Polynomial, ControllerPolys) {
    loop {
        let n = g.gen_range(1..=5);
        let (dp, np) = random_plant(g, n);
        let m = g.gen_range(1..=n);
        let den = monic_poly(g, m, -1.0, 1.0);
        let dy = g.gen_range(0..=m);
        let dr = g.gen_range(0..=m);
        let c = ControllerPolys {
            den,
            num_y: uniform_poly(g, dy, -2.0, 2.0),
            num_r: uniform_poly(g, dr, -1.0, 1.0),
        };
        if coprime_check(&c.den, &np, 1e-8).quality > COPRIME_QUALITY {
            return (dp, np, c);
        }
    }
}

pub fn factorization_suite(cases: usize, seed: u64) -> FactorizationReport {
    let mut g = rng(seed);
    let mut rep = FactorizationReport {
        cases,
        failures: vec![],
        max_factorization: 0.0,
        max_tf: 0.0,
    };
    for case in 0..cases {
        let (dp, np, pre) = random_conversion_instance(&mut g);
        match convert(&dp, &np, &pre, &ConversionConfig::default()) {
            Ok(out) => {
                let f = out.certificate.condition("factorization").unwrap().witness;
                let t = out.certificate.condition("tf_preserved").unwrap().witness;
                rep.max_factorization = rep.max_factorization.max(f);
                rep.max_tf = rep.max_tf.max(t);
                if f > 1e-8 {
                    rep.failures.push(format!("case {case}: factorization residual {f:e}"));
                }
            }
            Err(e) => rep.failures.push(format!("case {case}: {e}")),
        }
    }
    rep
}

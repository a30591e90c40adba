#![allow(dead_code)]

use intctrl::Polynomial;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn p(asc: &[f64]) -> Polynomial {
    Polynomial::from_ascending(asc.to_vec())
}

pub fn uniform_poly(rng: &mut impl Rng, degree: usize, lo: f64, hi: f64) -> Polynomial {
    let mut c: Vec<f64> = (0..=degree).map(|_| rng.gen_range(lo..hi)).collect();
    if c[degree].abs() < 0.1 {
        c[degree] = if c[degree] < 0.0 { -0.5 } else { 0.5 };
    }
    Polynomial::from_ascending(c)
}

pub fn monic_poly(rng: &mut impl Rng, degree: usize, lo: f64, hi: f64) -> Polynomial {
    let mut c: Vec<f64> = (0..degree).map(|_| rng.gen_range(lo..hi)).collect();
    c.push(1.0);
    Polynomial::from_ascending(c)
}

/// Conjugate-closed roots: complex pairs first, then real roots, all with
/// modulus in `[rmin, rmax)`.
pub fn random_roots(rng: &mut impl Rng, degree: usize, rmin: f64, rmax: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(degree);
    while out.len() < degree {
        let r = rng.gen_range(rmin..rmax);
        if degree - out.len() >= 2 && rng.gen_bool(0.5) {
            let th = rng.gen_range(0.1..std::f64::consts::PI - 0.1);
            let z = Complex64::from_polar(r, th);
            out.push(z);
            out.push(z.conj());
        } else {
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            out.push(Complex64::new(s * r, 0.0));
        }
    }
    out
}

/// Schur–Cohn step-down recursion: Schur iff every reflection coefficient
/// has modulus below one.
pub fn schur_cohn(poly: &Polynomial) -> bool {
    let mut c: Vec<f64> = poly.coeffs().to_vec();
    while c.len() > 1 {
        let m = c.len() - 1;
        let k = c[0] / c[m];
        if k.is_nan() || k.abs() >= 1.0 {
            return false;
        }
        let next: Vec<f64> = (1..=m).map(|i| c[i] - k * c[m - i]).collect();
        c = next;
    }
    !c.is_empty()
}

pub fn naive_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn naive_eval(a: &[f64], z: Complex64) -> Complex64 {
    a.iter().enumerate().map(|(i, &c)| c * z.powu(i as u32)).sum()
}

/// Resultant from the roots of `a`: `lead(a)^{deg b} ∏ b(λ_i)`.
pub fn resultant_from_roots(a_lead: f64, a_roots: &[Complex64], b: &Polynomial) -> f64 {
    let db = b.degree().unwrap_or(0) as i32;
    let prod: Complex64 = a_roots.iter().map(|&r| b.eval(r)).product();
    (a_lead.powi(db) * prod).re
}

pub fn max_abs_diff(a: &Polynomial, b: &Polynomial) -> f64 {
    (a - b).max_abs()
}

/// Random coprime plant with `deg N_p < n` and `|N_p(0)|` bounded away from zero.
pub fn random_plant(rng: &mut impl Rng, n: usize) -> (Polynomial, Polynomial) {
    loop {
        let dp = monic_poly(rng, n, -1.5, 1.5);
        let dn = rng.gen_range(0..n);
        let np = uniform_poly(rng, dn, -1.0, 1.0);
        if np.coeff(0).abs() < 0.05 {
            continue;
        }
        let q = intctrl::bezout::coprime_check(&dp, &np, 1e-8).quality;
        if q > 1e-4 {
            return (dp, np);
        }
    }
}
pub mod criteria;

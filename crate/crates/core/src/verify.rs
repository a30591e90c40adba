//! Certificates for synthesized and converted controllers.
//!
//! Certification never fails with an error: every check is recorded as a
//! [`Condition`] and the caller decides what a failed certificate means.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bezout::{coprime_check, identity_scale};
use crate::numeric::{poly_roots, schur_check};
use crate::poly::{Polynomial, TransferFunction};
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Stabilization,
    Conversion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub pass: bool,
    /// The scalar the decision was made on (radius, deviation, degree gap…).
    pub witness: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: ProblemKind,
    pub pass: bool,
    /// Relative residual of the defining polynomial identity.
    pub residual: f64,
    pub residual_tol: f64,
    pub conditions: Vec<Condition>,
    pub warnings: Vec<String>,
    /// Roots of α as `[re, im]`; for a conversion these are the closed-loop
    /// poles cancelled in `T_ry`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha_roots: Vec<[f64; 2]>,
    /// `T_ry(1)` of the converted loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_gain: Option<f64>,
}

impl Certificate {
    fn new(kind: ProblemKind, residual_tol: f64) -> Self {
        Self {
            kind,
            pass: false,
            residual: f64::NAN,
            residual_tol,
            conditions: Vec::new(),
            warnings: Vec::new(),
            alpha_roots: Vec::new(),
            dc_gain: None,
        }
    }

    fn check(&mut self, name: &str, pass: bool, witness: f64, detail: impl Into<String>) {
        self.conditions.push(Condition {
            name: name.into(),
            pass,
            witness,
            detail: detail.into(),
        });
    }

    fn finish(mut self) -> Self {
        self.pass = self.residual <= self.residual_tol && self.conditions.iter().all(|c| c.pass);
        self
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.conditions
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// `D_p·D_c − N_p·N_c`.
pub fn closed_loop_poly(dp: &Polynomial, np: &Polynomial, dc: &Polynomial, nc: &Polynomial) -> Polynomial {
    &(dp * dc) - &(np * nc)
}

/// `max|Σ terms|` relative to the largest coefficient among the terms.
fn relative_residual(terms: &[&Polynomial]) -> f64 {
    let sum = terms.iter().fold(Polynomial::zero(), |acc, t| &acc + *t);
    let scale = identity_scale(terms);
    if scale > 0.0 {
        sum.max_abs() / scale
    } else {
        0.0
    }
}

const NEAR_UNIT_CIRCLE: f64 = 1e-3;
const WEAK_COPRIME: f64 = 1e-4;

fn schur_condition(cert: &mut Certificate, name: &str, p: &Polynomial, tol: &Tolerances) {
    match schur_check(p, tol.margin) {
        Ok(rep) => {
            if rep.is_schur && rep.spectral_radius > 1.0 - NEAR_UNIT_CIRCLE {
                cert.warnings.push(format!(
                    "{name}: spectral radius {:.6} is close to 1",
                    rep.spectral_radius
                ));
            }
            cert.check(
                name,
                rep.is_schur,
                rep.spectral_radius,
                format!("spectral radius {:.10}", rep.spectral_radius),
            );
        }
        Err(e) => cert.check(name, false, f64::NAN, format!("root computation failed: {e}")),
    }
}

fn integer_monic_condition(cert: &mut Certificate, name: &str, p: &Polynomial, tol: &Tolerances) {
    let monic = p.is_monic(tol.monic);
    let dev = p.integer_deviation();
    cert.check(
        name,
        monic && dev <= tol.int,
        dev,
        format!(
            "leading coefficient {}, max distance to an integer {dev:e}",
            if p.is_zero() { 0.0 } else { p.leading() }
        ),
    );
}

fn coprime_warning(cert: &mut Certificate, what: &str, a: &Polynomial, b: &Polynomial, tol: &Tolerances) {
    let c = coprime_check(a, b, tol.coprime);
    if c.quality < WEAK_COPRIME {
        cert.warnings.push(format!(
            "{what} nearly share a root (Sylvester quality {:.3e})",
            c.quality
        ));
    }
}

/// Check `α·D_p + β·N_p = γ` with α integer monic, γ Schur monic and
/// `deg β < deg α`.
pub fn certify_stabilization(
    dp: &Polynomial,
    np: &Polynomial,
    alpha: &Polynomial,
    beta: &Polynomial,
    gamma: &Polynomial,
    tol: &Tolerances,
) -> Certificate {
    let mut cert = Certificate::new(ProblemKind::Stabilization, tol.certificate);
    let ad = alpha * dp;
    let bn = beta * np;
    let neg_gamma = -gamma;
    cert.residual = relative_residual(&[&ad, &bn, &neg_gamma]);

    integer_monic_condition(&mut cert, "S1_alpha_integer_monic", alpha, tol);
    let gamma_monic = gamma.is_monic(tol.monic);
    schur_condition(&mut cert, "S2_gamma_schur", gamma, tol);
    cert.check(
        "S2_gamma_monic",
        gamma_monic,
        if gamma.is_zero() { 0.0 } else { gamma.leading() },
        "leading coefficient of γ",
    );
    let gap = alpha.degree_or_neg() - beta.degree_or_neg();
    cert.check(
        "S3_degree_gap",
        gap > 0 || beta.is_zero(),
        gap as f64,
        format!("deg α = {}, deg β = {}", alpha.degree_or_neg(), beta.degree_or_neg()),
    );
    coprime_warning(&mut cert, "D_p and N_p", dp, np, tol);
    cert.finish()
}

/// Relative mismatch `max|n1·d2 − n2·d1| / max(|n1·d2|, |n2·d1|)`.
pub fn tf_mismatch(t1: &TransferFunction, t2: &TransferFunction) -> f64 {
    let a = &t1.num * &t2.den;
    let b = &t2.num * &t1.den;
    let scale = a.max_abs().max(b.max_abs());
    if scale == 0.0 {
        0.0
    } else {
        (&a - &b).max_abs() / scale
    }
}

/// Equality of rational functions by cross-multiplication, so common
/// factors need no cancellation.
pub fn tf_equal(t1: &TransferFunction, t2: &TransferFunction, tol: f64) -> bool {
    tf_mismatch(t1, t2) <= tol
}

/// Two-input controller `D_c u = N_cy y + N_cr r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerPolys {
    pub den: Polynomial,
    pub num_y: Polynomial,
    pub num_r: Polynomial,
}

/// `T_ry = N_cr N_p / (D_p D_c − N_p N_cy)`.
pub fn reference_to_output(dp: &Polynomial, np: &Polynomial, c: &ControllerPolys) -> TransferFunction {
    TransferFunction::new(&c.num_r * np, closed_loop_poly(dp, np, &c.den, &c.num_y))
}

/// Inputs to a conversion certificate.
pub struct ConversionClaim<'a> {
    pub dp: &'a Polynomial,
    pub np: &'a Polynomial,
    /// Plant degree `n`.
    pub n: usize,
    pub pre: &'a ControllerPolys,
    pub converted: &'a ControllerPolys,
    pub alpha: &'a Polynomial,
    pub beta: &'a Polynomial,
    pub gamma: &'a Polynomial,
}

/// Check the converted controller: Problem 2 conditions, transfer-function
/// preservation, internal stability, and the factorization of the new
/// characteristic polynomial through α.
pub fn certify_conversion(claim: &ConversionClaim<'_>, tol: &Tolerances) -> Certificate {
    let ConversionClaim {
        dp,
        np,
        n,
        pre,
        converted,
        alpha,
        beta,
        gamma,
    } = *claim;
    let mut cert = Certificate::new(ProblemKind::Conversion, tol.certificate);
    let adc = alpha * &pre.den;
    let bn = beta * np;
    let neg_gamma = -gamma;
    cert.residual = relative_residual(&[&adc, &bn, &neg_gamma]);

    let alpha_monic = alpha.is_monic(tol.monic);
    cert.check(
        "C1_alpha_monic",
        alpha_monic,
        if alpha.is_zero() { 0.0 } else { alpha.leading() },
        "leading coefficient of α",
    );
    schur_condition(&mut cert, "C1_alpha_schur", alpha, tol);
    integer_monic_condition(&mut cert, "C2_gamma_integer_monic", gamma, tol);
    let gap = gamma.degree_or_neg() - n as i64 - beta.degree_or_neg();
    cert.check(
        "C3_degree_gap",
        gap > 0 || beta.is_zero(),
        gap as f64,
        format!(
            "deg γ − n = {}, deg β = {}",
            gamma.degree_or_neg() - n as i64,
            beta.degree_or_neg()
        ),
    );
    integer_monic_condition(&mut cert, "denominator_integer_monic", &converted.den, tol);

    let t_pre = reference_to_output(dp, np, pre);
    let t_new = reference_to_output(dp, np, converted);
    let mismatch = tf_mismatch(&t_pre, &t_new);
    cert.check(
        "tf_preserved",
        mismatch <= tol.tf,
        mismatch,
        "relative cross-multiplication mismatch of T_ry",
    );

    let cl_new = &t_new.den;
    schur_condition(&mut cert, "internal_stability", cl_new, tol);

    let factored = alpha * &t_pre.den;
    let neg_factored = -&factored;
    let fact_res = relative_residual(&[cl_new, &neg_factored]);
    cert.check(
        "factorization",
        fact_res <= tol.certificate,
        fact_res,
        "D_p·D_c′ − N_p·N_cy′ against α·(D_p·D_c − N_p·N_cy)",
    );

    let dd = converted.den.degree_or_neg();
    let proper = converted.num_y.degree_or_neg() <= dd && converted.num_r.degree_or_neg() <= dd;
    cert.check(
        "proper",
        proper,
        (dd - converted.num_y.degree_or_neg().max(converted.num_r.degree_or_neg())) as f64,
        format!(
            "deg D_c′ = {dd}, deg N_cy′ = {}, deg N_cr′ = {}",
            converted.num_y.degree_or_neg(),
            converted.num_r.degree_or_neg()
        ),
    );

    match schur_check(&t_pre.den, tol.margin) {
        Ok(rep) if !rep.is_schur => cert.warnings.push(format!(
            "pre-designed loop is not Schur (spectral radius {:.6})",
            rep.spectral_radius
        )),
        Err(e) => cert.warnings.push(format!("pre-designed loop roots unavailable: {e}")),
        _ => {}
    }
    coprime_warning(&mut cert, "D_c and N_p", &pre.den, np, tol);

    let zero_roots = alpha.low_order_zeros(0.0);
    let mut roots: Vec<[f64; 2]> = vec![[0.0, 0.0]; zero_roots];
    if alpha.degree().unwrap_or(0) > zero_roots {
        if let Ok(rs) = poly_roots(alpha) {
            roots.extend(rs.iter().map(|r| [r.re, r.im]));
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    cert.alpha_roots = roots;
    let g = t_new.eval(Complex64::new(1.0, 0.0));
    cert.dc_gain = Some(g.re);
    cert.finish()
}

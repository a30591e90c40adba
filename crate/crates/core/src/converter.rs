//! Conversion of a two-input controller `D_c u = N_cy y + N_cr r` into one
//! with an integer monic denominator and the same reference-to-output
//! transfer function.
//!
//! Here the roles are swapped relative to stabilization: the Schur factors
//! `p_u` accumulate in α and the integer polynomial `γ = z^N p_{x⋆}` becomes
//! the new denominator.

use num_complex::Complex64;

use crate::bezout::{coprime_check, coprime_with_roots, f_map, identity_scale};
use crate::error::{Error, Result};
use crate::numeric::{classify_roots, schur_check};
use crate::poly::{CoeffVector, Polynomial};
use crate::stabilizer::{
    drive, exact_quotient, invariant_residual, preprocess_plant, DriveConfig, PreprocessedPlant, SynthesisTrace,
};
use crate::target::TargetConfig;
use crate::tolerance::Tolerances;
use crate::verify::{certify_conversion, Certificate, ControllerPolys, ConversionClaim};

/// Pre-designed controller normalized so that `D_c` is monic.
#[derive(Clone, Debug, PartialEq)]
pub struct PreController {
    pub polys: ControllerPolys,
    /// Leading coefficient of the supplied `D_c`.
    pub scale: f64,
}

impl PreController {
    pub fn new(c: &ControllerPolys) -> Result<Self> {
        let dd = c
            .den
            .degree()
            .ok_or_else(|| Error::Precondition("controller denominator is zero".into()))?;
        for (name, p) in [("N_cy", &c.num_y), ("N_cr", &c.num_r)] {
            if p.degree_or_neg() > dd as i64 {
                return Err(Error::Precondition(format!(
                    "controller is improper: deg {name} = {} > deg D_c = {dd}",
                    p.degree_or_neg()
                )));
            }
        }
        let scale = c.den.leading();
        Ok(Self {
            polys: ControllerPolys {
                den: c.den.monic(),
                num_y: c.num_y.scale(1.0 / scale),
                num_r: c.num_r.scale(1.0 / scale),
            },
            scale,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum AlphaIni {
    /// `z^{max(1, n − deg D_c)}`.
    #[default]
    Default,
    Roots(Vec<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConversionConfig {
    pub alpha0: AlphaIni,
    pub mu: f64,
    pub target: TargetConfig,
    pub max_iterations: Option<usize>,
    pub tolerances: Tolerances,
    pub verify_invariants: bool,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        Self {
            alpha0: AlphaIni::Default,
            mu: 0.99,
            target: TargetConfig::default(),
            max_iterations: None,
            tolerances: Tolerances::default(),
            verify_invariants: false,
        }
    }
}

/// Solution of `α D_c + β N_p = γ` with α Schur monic, γ integer monic and
/// `deg β < deg γ − n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Algorithm2Output {
    pub alpha: Polynomial,
    pub beta: Polynomial,
    pub gamma: Polynomial,
    /// Power of `z` in `γ` produced by the iterations, before lifting.
    pub shift: usize,
    /// `z^l` factored out of `N_p` and reapplied to α and γ.
    pub lift: usize,
    pub trace: SynthesisTrace,
    pub division_residual: f64,
}

fn initial_alpha(spec: &AlphaIni, n: usize, dc_deg: usize, np: &Polynomial, tol: &Tolerances) -> Result<Polynomial> {
    let needed = n.saturating_sub(dc_deg);
    match spec {
        AlphaIni::Default => Ok(Polynomial::monomial(needed.max(1), 1.0)),
        AlphaIni::Roots(roots) => {
            if roots.len() < needed {
                return Err(Error::Precondition(format!(
                    "initial α needs at least {needed} roots, got {}",
                    roots.len()
                )));
            }
            classify_roots(roots, tol.imag, tol.conj)
                .map_err(|_| Error::Precondition("initial α roots are not closed under conjugation".into()))?;
            let a = Polynomial::from_roots(roots).monic();
            let rep = schur_check(&a, tol.margin)?;
            if !rep.is_schur {
                return Err(Error::Precondition(format!(
                    "initial α is not Schur (spectral radius {})",
                    rep.spectral_radius
                )));
            }
            let c = coprime_with_roots(roots, np, tol.coprime);
            if !c.coprime {
                return Err(Error::NotCoprime { quality: c.quality });
            }
            Ok(a)
        }
    }
}

/// `n` is the plant degree; `dc` must be monic and coprime to `np`.
pub fn run_algorithm2(dc: &Polynomial, np: &Polynomial, n: usize, cfg: &ConversionConfig) -> Result<Algorithm2Output> {
    if !(cfg.mu > 0.0 && cfg.mu < 1.0) {
        return Err(Error::Precondition(format!("μ = {} is outside (0, 1)", cfg.mu)));
    }
    let tol = &cfg.tolerances;
    let dcd = dc
        .degree()
        .ok_or_else(|| Error::Precondition("controller denominator is zero".into()))?;
    if !dc.is_monic(tol.monic) {
        return Err(Error::NotMonic {
            expected: dcd,
            found: dc.to_string(),
        });
    }
    if n == 0 {
        return Err(Error::Precondition("plant degree must be at least 1".into()));
    }
    let lift = np.low_order_zeros(tol.trim * np.max_abs());
    let npr = np.unshift(lift);
    if npr.degree().is_some_and(|d| d > n) {
        return Err(Error::Precondition(format!("deg N_p exceeds the plant degree {n}")));
    }
    let c = coprime_check(dc, &npr, tol.coprime);
    if !c.coprime {
        return Err(Error::NotCoprime { quality: c.quality });
    }

    let mut alpha = initial_alpha(&cfg.alpha0, n, dcd, &npr, tol)?;
    let q = &alpha * dc;
    let mut shift = q.degree().unwrap_or(0) - n;
    let r = f_map(
        &Polynomial::monomial(shift, 1.0),
        &q,
        &npr,
        tol.residual.max(tol.certificate),
    )?
    .r;
    let x0 = CoeffVector::from_monic_polynomial(&r, n, tol.monic)?;

    let drive_cfg = DriveConfig {
        mu: cfg.mu,
        target: &cfg.target,
        max_iterations: cfg.max_iterations,
        tolerances: tol,
    };
    let trace = drive(&npr, &x0, &drive_cfg, |u, next| {
        let pu = u.to_monic_polynomial();
        alpha = &pu * &alpha;
        shift += n;
        let res = if cfg.verify_invariants {
            let rep = schur_check(&pu, tol.margin)?;
            if !rep.is_schur {
                return Err(Error::NumericalBreakdown {
                    what: "Schur input factor",
                    residual: rep.spectral_radius,
                    tolerance: 1.0 - tol.margin,
                });
            }
            let z_n = Polynomial::monomial(shift, 1.0);
            Some(invariant_residual(&z_n, &(&alpha * dc), &npr, next, tol)?)
        } else {
            None
        };
        Ok((alpha.degree().unwrap_or(0), res))
    })?;

    let gamma = CoeffVector::from_integers(&trace.xstar)
        .to_monic_polynomial()
        .shift(shift);
    let adc = &alpha * dc;
    let num = &gamma - &adc;
    let scale = identity_scale(&[&gamma, &adc]);
    let (beta, division_residual) = exact_quotient(&num, &npr, shift, scale, tol.residual)?;
    if beta.degree_or_neg() >= shift as i64 {
        return Err(Error::Inconsistent(format!(
            "deg β = {} is not below deg γ − n = {shift}",
            beta.degree_or_neg()
        )));
    }
    Ok(Algorithm2Output {
        alpha: alpha.shift(lift),
        beta,
        gamma: gamma.shift(lift),
        shift,
        lift,
        trace,
        division_residual,
    })
}

/// `D_c′ = γ`, `N_cr′ = α N_cr`, `N_cy′ = β D_p + α N_cy`.
pub fn assemble_converted(
    pre: &ControllerPolys,
    dp: &Polynomial,
    alpha: &Polynomial,
    beta: &Polynomial,
    gamma: &Polynomial,
) -> ControllerPolys {
    ControllerPolys {
        den: gamma.clone(),
        num_y: &(beta * dp) + &(alpha * &pre.num_y),
        num_r: alpha * &pre.num_r,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvertedController {
    pub controller: ControllerPolys,
    pub pre: PreController,
    pub plant: PreprocessedPlant,
    pub solution: Algorithm2Output,
    pub certificate: Certificate,
}

/// Normalize plant and controller, run the conversion and certify it.
pub fn convert(
    dp: &Polynomial,
    np: &Polynomial,
    controller: &ControllerPolys,
    cfg: &ConversionConfig,
) -> Result<ConvertedController> {
    let tol = &cfg.tolerances;
    let plant = preprocess_plant(dp, np, tol)?;
    let pre = PreController::new(controller)?;
    let n = plant.n();
    let solution = run_algorithm2(&pre.polys.den, &plant.np_full, n, cfg)?;
    let converted = assemble_converted(&pre.polys, &plant.dp, &solution.alpha, &solution.beta, &solution.gamma);
    let mut certificate = certify_conversion(
        &ConversionClaim {
            dp: &plant.dp,
            np: &plant.np_full,
            n,
            pre: &pre.polys,
            converted: &converted,
            alpha: &solution.alpha,
            beta: &solution.beta,
            gamma: &solution.gamma,
        },
        tol,
    );
    if solution.lift > 0 {
        certificate.warnings.push(format!(
            "N_p(0) = 0: z^{} was factored out of N_p and reapplied to α and γ",
            solution.lift
        ));
    }
    Ok(ConvertedController {
        controller: converted,
        pre,
        plant,
        solution,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(asc: &[f64]) -> Polynomial {
        Polynomial::from_ascending(asc.to_vec())
    }

    #[test]
    fn already_integer_needs_nothing() {
        let cfg = ConversionConfig {
            alpha0: AlphaIni::Roots(vec![]),
            ..Default::default()
        };
        let out = run_algorithm2(&p(&[0.0, 1.0]), &p(&[1.0]), 1, &cfg).unwrap();
        assert_eq!(out.alpha, p(&[1.0]));
        assert!(out.beta.is_zero());
        assert_eq!(out.gamma, p(&[0.0, 1.0]));
        assert_eq!(out.trace.iterations(), 0);
    }

    #[test]
    fn identity_assembly() {
        let pre = ControllerPolys {
            den: p(&[0.2, 1.0]),
            num_y: p(&[0.7]),
            num_r: p(&[0.3, 0.1]),
        };
        let dp = p(&[-2.0, 1.0]);
        let c = assemble_converted(&pre, &dp, &p(&[1.0]), &Polynomial::zero(), &pre.den);
        assert_eq!(c, pre);
    }

    #[test]
    fn first_order_loop_conversion() {
        // plant 1/(z - 2) with u = (-3.06 y + 0.56 r)/(z + 1.5): loop poles 0.3, 0.2
        let dp = p(&[-2.0, 1.0]);
        let np = p(&[1.0]);
        let pre = ControllerPolys {
            den: p(&[1.5, 1.0]),
            num_y: p(&[-3.06]),
            num_r: p(&[0.56]),
        };
        let cfg = ConversionConfig {
            verify_invariants: true,
            ..Default::default()
        };
        let out = convert(&dp, &np, &pre, &cfg).unwrap();
        assert!(out.certificate.pass, "{:?}", out.certificate.failed());
        assert_eq!(out.controller.den.integer_deviation(), 0.0);
        assert!((out.certificate.dc_gain.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lifted_numerator() {
        // plant z/(z² - 1.2 z + 1.1) with a stabilizing-in-spirit controller; the
        // identity and degree conditions hold regardless of loop stability
        let dp = p(&[1.1, -1.2, 1.0]);
        let np = p(&[0.0, 1.0]);
        let pre = ControllerPolys {
            den: p(&[0.1, 0.4, 1.0]),
            num_y: p(&[0.2, -0.5]),
            num_r: p(&[0.1]),
        };
        let out = convert(&dp, &np, &pre, &ConversionConfig::default()).unwrap();
        assert_eq!(out.solution.lift, 1);
        let c = &out.certificate;
        assert!(c.residual <= c.residual_tol);
        for name in [
            "C1_alpha_schur",
            "C2_gamma_integer_monic",
            "C3_degree_gap",
            "tf_preserved",
            "factorization",
            "proper",
        ] {
            assert!(c.condition(name).unwrap().pass, "{name}");
        }
        assert!(c.warnings.iter().any(|w| w.contains("z^1")));
    }

    #[test]
    fn improper_controller_rejected() {
        let pre = ControllerPolys {
            den: p(&[1.0]),
            num_y: p(&[0.0, 1.0]),
            num_r: p(&[1.0]),
        };
        assert!(PreController::new(&pre).is_err());
    }
}

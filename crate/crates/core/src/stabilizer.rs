//! Stabilizing controllers with integer monic denominators.
//!
//! The coefficients of `α = z^N p_x` are steered from the real solution of
//! `α D_p + β N_p = γ^ini` to an integer point `x⋆`, each step multiplying
//! `γ` by a Schur factor `p_u` with `‖u‖₁ < 1`.

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bezout::{coprime_check, coprime_with_roots, f_map, identity_scale};
use crate::error::{Error, Result};
use crate::numeric::{classify_roots, schur_check};
use crate::poly::{CoeffVector, Polynomial};
use crate::target::{
    active_index_set, build_hyperplanes, control_input, find_integer_target, DeltaFactors, TargetConfig, TargetStrategy,
};
use crate::tolerance::Tolerances;
use crate::verify::{certify_stabilization, Certificate};

/// How the initial closed-loop polynomial is chosen.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum GammaIni {
    /// `z^{2n}`.
    #[default]
    Default,
    /// Monic polynomial with these roots (conjugate-closed, `2n` of them).
    Roots(Vec<Complex64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationConfig {
    pub gamma_ini: GammaIni,
    pub mu: f64,
    pub target: TargetConfig,
    /// `None` selects `10·⌈‖x⋆ − x_0‖₁⌉ + 10`.
    pub max_iterations: Option<usize>,
    pub tolerances: Tolerances,
    /// Recompute the loop invariant after every step.
    pub verify_invariants: bool,
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        Self {
            gamma_ini: GammaIni::Default,
            mu: 0.99,
            target: TargetConfig::default(),
            max_iterations: None,
            tolerances: Tolerances::default(),
            verify_invariants: false,
        }
    }
}

/// Shared settings of the coefficient-space drive.
#[derive(Clone, Debug)]
pub(crate) struct DriveConfig<'a> {
    pub mu: f64,
    pub target: &'a TargetConfig,
    pub max_iterations: Option<usize>,
    pub tolerances: &'a Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// State before the step.
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub u_norm: f64,
    pub hit: bool,
    /// Degree of the accumulated polynomial (γ or α) after the step.
    pub accumulated_degree: usize,
    /// `‖x⋆ − x_k‖₁` before the step.
    pub distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisTrace {
    pub x0: Vec<f64>,
    pub xstar: Vec<i64>,
    pub strategy: TargetStrategy,
    pub candidates_examined: usize,
    pub target_margin: f64,
    pub hyperplanes: usize,
    pub active_hyperplanes: usize,
    pub iteration_cap: usize,
    pub records: Vec<IterationRecord>,
}

impl SynthesisTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

pub(crate) fn default_cap(x0: &CoeffVector, xstar: &CoeffVector) -> usize {
    10 * xstar.sub(x0).l1_norm().ceil() as usize + 10
}

/// Drive `x_0` to an integer target. `on_step(u, x_next)` is called after
/// every step and returns the degree of the accumulated polynomial together
/// with an optional invariant residual.
pub(crate) fn drive(
    np: &Polynomial,
    x0: &CoeffVector,
    cfg: &DriveConfig<'_>,
    mut on_step: impl FnMut(&CoeffVector, &CoeffVector) -> Result<(usize, Option<f64>)>,
) -> Result<SynthesisTrace> {
    let n = x0.dim();
    let tol = cfg.tolerances;
    let planes = build_hyperplanes(np, n, tol)?;
    let active = active_index_set(x0, &planes, tol.active)?;
    let outcome = find_integer_target(x0, &planes, &active, cfg.target, tol.side)?;
    let xstar = outcome.vector();
    let cap = cfg.max_iterations.unwrap_or_else(|| default_cap(x0, &xstar));
    if cap == 0 {
        return Err(Error::Precondition("max_iterations must be at least 1".into()));
    }
    info!(
        "x0 = {:?}, x* = {:?} via {:?}, {} of {} hyperplanes active",
        x0.entries(),
        outcome.xstar,
        outcome.strategy,
        active.indices.len(),
        planes.len()
    );
    let factors = DeltaFactors::new(np, n)?;
    let mut x = x0.clone();
    let mut records = Vec::new();
    while x != xstar {
        let distance = xstar.sub(&x).l1_norm();
        if records.len() >= cap {
            return Err(Error::IterationCap { cap, distance });
        }
        let delta = factors.delta(&x);
        let step = control_input(&x, &xstar, &delta, cfg.mu)?;
        let next = if step.hit {
            xstar.clone()
        } else {
            CoeffVector::from_dvector(&(x.to_dvector() + &delta * step.u.to_dvector()))
        };
        let (accumulated_degree, invariant_residual) = on_step(&step.u, &next)?;
        debug!(
            "k = {}: ‖u‖₁ = {:.6}, hit = {}, distance {:.6}",
            records.len(),
            step.u.l1_norm(),
            step.hit,
            distance
        );
        records.push(IterationRecord {
            k: records.len(),
            x: x.entries().to_vec(),
            u_norm: step.u.l1_norm(),
            u: step.u.into_entries(),
            hit: step.hit,
            accumulated_degree,
            distance,
            invariant_residual,
        });
        x = next;
    }
    Ok(SynthesisTrace {
        x0: x0.entries().to_vec(),
        xstar: outcome.xstar,
        strategy: outcome.strategy,
        candidates_examined: outcome.examined,
        target_margin: outcome.margin,
        hyperplanes: planes.len(),
        active_hyperplanes: active.indices.len(),
        iteration_cap: cap,
        records,
    })
}

/// `max|r − p_x|` relative to `1 + ‖x‖∞`, where `r = F(p, q)`.
pub(crate) fn invariant_residual(
    p: &Polynomial,
    q: &Polynomial,
    np: &Polynomial,
    x: &CoeffVector,
    tol: &Tolerances,
) -> Result<f64> {
    let r = f_map(p, q, np, tol.certificate)?.r;
    let diff = &r - &x.to_monic_polynomial();
    let res = diff.max_abs() / (1.0 + x.linf_norm());
    if res > tol.certificate {
        return Err(Error::NumericalBreakdown {
            what: "loop invariant p_x = F(·,·)",
            residual: res,
            tolerance: tol.certificate,
        });
    }
    Ok(res)
}

/// `β` with `β·den = num` and `deg β < quotient_len`, solved by least
/// squares on the convolution matrix of `den`. Long division amplifies
/// rounding when `den` has roots outside the unit disk. Coefficients of
/// `num` at or above `quotient_len + deg den` vanish in theory and count
/// toward the residual.
pub(crate) fn exact_quotient(
    num: &Polynomial,
    den: &Polynomial,
    quotient_len: usize,
    scale: f64,
    tol_residual: f64,
) -> Result<(Polynomial, f64)> {
    let dd = den
        .degree()
        .ok_or_else(|| Error::Precondition("division by the zero polynomial".into()))?;
    if quotient_len == 0 {
        let residual = if scale > 0.0 { num.max_abs() / scale } else { 0.0 };
        return check_remainder(Polynomial::zero(), residual, tol_residual);
    }
    let keep = quotient_len + dd;
    let dropped = num.coeffs().iter().skip(keep).fold(0.0_f64, |m, c| m.max(c.abs()));
    let conv = DMatrix::from_fn(keep, quotient_len, |i, j| if i >= j { den.coeff(i - j) } else { 0.0 });
    let rhs = DVector::from_fn(keep, |i, _| num.coeff(i));
    let sol = conv
        .clone()
        .svd(true, true)
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Precondition(format!("β division: {e}")))?;
    let rem = (&conv * &sol - &rhs).amax();
    let q = Polynomial::from_ascending(sol.iter().copied().collect());
    let residual = if scale > 0.0 { dropped.max(rem) / scale } else { 0.0 };
    check_remainder(q, residual, tol_residual)
}

fn check_remainder(q: Polynomial, residual: f64, tol_residual: f64) -> Result<(Polynomial, f64)> {
    if residual > tol_residual {
        return Err(Error::NumericalBreakdown {
            what: "β division remainder",
            residual,
            tolerance: tol_residual,
        });
    }
    Ok((q, residual))
}

/// Plant after normalization: `D_p` monic and `z^l` removed from `N_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessedPlant {
    pub dp: Polynomial,
    /// `N_p / z^l`, with `N_p(0) ≠ 0`.
    pub np: Polynomial,
    /// `N_p` of the normalized plant, `z^l` included.
    pub np_full: Polynomial,
    pub l: usize,
    /// Leading coefficient of the original `D_p`.
    pub scale: f64,
}

impl PreprocessedPlant {
    pub fn n(&self) -> usize {
        self.dp.degree().unwrap_or(0)
    }
}

pub fn preprocess_plant(dp: &Polynomial, np: &Polynomial, tol: &Tolerances) -> Result<PreprocessedPlant> {
    let ddp = dp
        .degree()
        .ok_or_else(|| Error::Precondition("plant denominator is zero".into()))?;
    let dnp = np
        .degree()
        .ok_or_else(|| Error::Precondition("plant numerator is zero".into()))?;
    if dnp > ddp {
        return Err(Error::Improper { num: dnp, den: ddp });
    }
    let scale = dp.leading();
    let dpm = dp.monic();
    let npm = np.scale(1.0 / scale);
    let cut = tol.trim * npm.max_abs();
    let l = npm.low_order_zeros(cut);
    let np_full = Polynomial::from_ascending(
        npm.coeffs()
            .iter()
            .enumerate()
            .map(|(i, &c)| if i < l { 0.0 } else { c })
            .collect(),
    );
    let np_red = np_full.unshift(l);
    let c = coprime_check(&dpm, &np_full, tol.coprime);
    if !c.coprime {
        return Err(Error::NotCoprime { quality: c.quality });
    }
    Ok(PreprocessedPlant {
        dp: dpm,
        np: np_red,
        np_full,
        l,
        scale,
    })
}

/// Initial closed-loop polynomial of degree `2n`, monic, Schur and coprime
/// to `N_p`.
pub fn gamma_ini(n: usize, np: &Polynomial, spec: &GammaIni, tol: &Tolerances) -> Result<Polynomial> {
    let g = match spec {
        GammaIni::Default => Polynomial::monomial(2 * n, 1.0),
        GammaIni::Roots(roots) => {
            if roots.len() != 2 * n {
                return Err(Error::Precondition(format!(
                    "γ_ini needs {} roots, got {}",
                    2 * n,
                    roots.len()
                )));
            }
            if let Some(r) = roots.iter().find(|r| r.norm() >= 1.0 - tol.margin) {
                return Err(Error::Precondition(format!(
                    "γ_ini root {r} is not inside the unit disk"
                )));
            }
            classify_roots(roots, tol.imag, tol.conj)
                .map_err(|_| Error::Precondition("γ_ini roots are not closed under conjugation".into()))?;
            Polynomial::from_roots(roots).monic()
        }
    };
    let zero = [Complex64::new(0.0, 0.0)];
    let roots: &[Complex64] = match spec {
        GammaIni::Default => &zero,
        GammaIni::Roots(r) => r,
    };
    let rep = schur_check(&g, tol.margin)?;
    if !rep.is_schur {
        return Err(Error::Precondition(format!(
            "γ_ini is not Schur (spectral radius {})",
            rep.spectral_radius
        )));
    }
    let c = coprime_with_roots(roots, np, tol.coprime);
    if !c.coprime {
        return Err(Error::NotCoprime { quality: c.quality });
    }
    Ok(g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationResult {
    /// `z^{N+l} p_{x⋆}`, integer monic.
    pub alpha: Polynomial,
    pub beta: Polynomial,
    /// Schur monic, equal to `α D_p + β N_p` for the normalized plant.
    pub gamma: Polynomial,
    /// Power of `z` accumulated by the iterations.
    pub shift: usize,
    pub plant: PreprocessedPlant,
    pub trace: SynthesisTrace,
    /// Relative remainder of the final division.
    pub division_residual: f64,
    pub certificate: Certificate,
}

impl StabilizationResult {
    /// `p_{x⋆}`, the integer part of α.
    pub fn alpha_core(&self) -> Polynomial {
        CoeffVector::from_integers(&self.trace.xstar).to_monic_polynomial()
    }

    /// `(D_c, N_c) = (α, −β)`.
    pub fn controller(&self) -> (Polynomial, Polynomial) {
        (self.alpha.clone(), -&self.beta)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("μ = {mu} is outside (0, 1)")))
    }
}

/// Solve `α D_p + β N_p = γ` with α integer monic, γ Schur monic and
/// `deg β < deg α`.
pub fn run_algorithm1(dp: &Polynomial, np: &Polynomial, cfg: &StabilizationConfig) -> Result<StabilizationResult> {
    check_mu(cfg.mu)?;
    let tol = &cfg.tolerances;
    let plant = preprocess_plant(dp, np, tol)?;
    let n = plant.n();
    if n == 0 {
        return Err(Error::Precondition("plant denominator must have degree ≥ 1".into()));
    }
    let (dpm, npr) = (&plant.dp, &plant.np);
    let g0 = gamma_ini(n, npr, &cfg.gamma_ini, tol)?;
    let alpha_ini = f_map(dpm, &g0, npr, tol.residual.max(tol.certificate))?.r;
    let x0 = CoeffVector::from_monic_polynomial(&alpha_ini, n, tol.monic)?;

    let mut gamma = g0;
    let mut shift = 0usize;
    let drive_cfg = DriveConfig {
        mu: cfg.mu,
        target: &cfg.target,
        max_iterations: cfg.max_iterations,
        tolerances: tol,
    };
    let trace = drive(npr, &x0, &drive_cfg, |u, next| {
        gamma = &u.to_monic_polynomial() * &gamma;
        shift += n;
        let res = if cfg.verify_invariants {
            let rep = schur_check(&u.to_monic_polynomial(), tol.margin)?;
            if !rep.is_schur {
                return Err(Error::NumericalBreakdown {
                    what: "Schur input factor",
                    residual: rep.spectral_radius,
                    tolerance: 1.0 - tol.margin,
                });
            }
            Some(invariant_residual(&dpm.shift(shift), &gamma, npr, next, tol)?)
        } else {
            None
        };
        Ok((gamma.degree().unwrap_or(0), res))
    })?;

    let xstar = CoeffVector::from_integers(&trace.xstar);
    let alpha_red = xstar.to_monic_polynomial().shift(shift);
    let ad = &alpha_red * dpm;
    let num = &gamma - &ad;
    let scale = identity_scale(&[&gamma, &ad]);
    let (beta, division_residual) = exact_quotient(&num, npr, n + shift, scale, tol.residual)?;
    if beta.degree_or_neg() >= alpha_red.degree_or_neg() {
        return Err(Error::Inconsistent(format!(
            "deg β = {} is not below deg α = {}",
            beta.degree_or_neg(),
            alpha_red.degree_or_neg()
        )));
    }

    let alpha = alpha_red.shift(plant.l);
    let gamma = gamma.shift(plant.l);
    let certificate = certify_stabilization(dpm, &plant.np_full, &alpha, &beta, &gamma, tol);
    Ok(StabilizationResult {
        alpha,
        beta,
        gamma,
        shift,
        plant,
        trace,
        division_residual,
        certificate,
    })
}

/// Biproper variant: stabilize `(D_p, β̃·N_p)` and return
/// `(D_c, N_c) = (α, −β̃·β)` with `deg N_c ≤ deg D_c`.
pub fn stabilize_proper(
    dp: &Polynomial,
    np: &Polynomial,
    beta_tilde: &Polynomial,
    cfg: &StabilizationConfig,
) -> Result<(Polynomial, Polynomial, StabilizationResult)> {
    if beta_tilde.degree() != Some(1) {
        return Err(Error::Precondition("β̃ must have degree 1".into()));
    }
    let c = coprime_check(dp, beta_tilde, cfg.tolerances.coprime);
    if !c.coprime {
        return Err(Error::Precondition(format!(
            "β̃ = {beta_tilde} shares a root with D_p (Sylvester quality {:.3e})",
            c.quality
        )));
    }
    let res = run_algorithm1(dp, &(beta_tilde * np), cfg)?;
    let dc = res.alpha.clone();
    // the plant was normalized by its leading coefficient; β̃ is unaffected
    let nc = -&(beta_tilde * &res.beta);
    Ok((dc, nc, res))
}

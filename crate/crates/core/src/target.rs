//! Coefficient-space geometry for the integer-target dynamics.
//!
//! Each root of `N_p` defines a hyperplane (or, for a conjugate pair, two of
//! them) in the space of degree-`n` monic polynomials: the polynomials
//! having that root. `Δ(x)` is invertible exactly off these hyperplanes, so
//! an integer destination `x⋆` is chosen on the same side of every active
//! hyperplane as the starting point `x_0`, and the state is driven along
//! the segment between them.

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{factor, solve_linear, vec_1norm, RootSet};
use crate::poly::{toeplitz_stack, CoeffVector, Polynomial};
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneKind {
    RealRoot,
    ComplexRealPart,
    ComplexImagPart,
}

/// `{x : φᵀx = ψ}`, with `φᵀx - ψ` equal to `p_x(root)` (real root) or its
/// real or imaginary part (complex root).
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    pub phi: Vec<f64>,
    pub psi: f64,
    pub kind: PlaneKind,
    pub source_root: Complex64,
}

impl Hyperplane {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.phi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.psi
    }

    pub fn phi_l1(&self) -> f64 {
        vec_1norm(&self.phi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneSet {
    pub n: usize,
    pub planes: Vec<Hyperplane>,
    pub roots: RootSet,
}

impl HyperplaneSet {
    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }
}

/// Powers `[z^n, z^{n-1}, …, 1]`.
fn descending_powers(z: Complex64, n: usize) -> Vec<Complex64> {
    let mut pw = vec![Complex64::new(1.0, 0.0); n + 1];
    for k in (0..n).rev() {
        pw[k] = pw[k + 1] * z;
    }
    pw
}

/// Hyperplanes from the roots of `N_p`: one per real root, two per
/// conjugate pair, ordered real roots first.
pub fn build_hyperplanes(np: &Polynomial, n: usize, tol: &Tolerances) -> Result<HyperplaneSet> {
    let dn = np
        .degree()
        .ok_or_else(|| Error::Precondition("plant numerator is zero".into()))?;
    if dn > n {
        return Err(Error::Precondition(format!(
            "deg N_p = {dn} exceeds the coefficient-space dimension {n}"
        )));
    }
    if np.coeff(0) == 0.0 {
        return Err(Error::Precondition("hyperplanes need N_p(0) ≠ 0".into()));
    }
    let roots = if dn == 0 {
        RootSet {
            real_roots: vec![],
            complex_pairs: vec![],
            leading_coeff: np.leading(),
        }
    } else {
        factor(np, tol)?
    };

    let mut planes = Vec::with_capacity(dn);
    for &lambda in &roots.real_roots {
        let pw = descending_powers(Complex64::new(lambda, 0.0), n);
        planes.push(Hyperplane {
            phi: pw[1..].iter().map(|c| c.re).collect(),
            psi: -pw[0].re,
            kind: PlaneKind::RealRoot,
            source_root: Complex64::new(lambda, 0.0),
        });
    }
    for &eta in &roots.complex_pairs {
        // ½[[1, 1], [-i, i]] applied to the rows for η and η* gives the
        // real and imaginary parts of the η row.
        let pw = descending_powers(eta, n);
        planes.push(Hyperplane {
            phi: pw[1..].iter().map(|c| c.re).collect(),
            psi: -pw[0].re,
            kind: PlaneKind::ComplexRealPart,
            source_root: eta,
        });
        planes.push(Hyperplane {
            phi: pw[1..].iter().map(|c| c.im).collect(),
            psi: -pw[0].im,
            kind: PlaneKind::ComplexImagPart,
            source_root: eta,
        });
    }
    Ok(HyperplaneSet { n, planes, roots })
}

/// Planes on which the base point does not lie.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub indices: Vec<usize>,
    /// Complex-part planes through the base point, left out of the
    /// same-side condition.
    pub excluded: Vec<usize>,
    /// `φ_tᵀx_0 - ψ_t` for every plane.
    pub base_values: Vec<f64>,
}

pub fn active_index_set(x0: &CoeffVector, set: &HyperplaneSet, tol_active: f64) -> Result<ActiveSet> {
    let xinf = x0.linf_norm();
    let mut indices = Vec::new();
    let mut excluded = Vec::new();
    let mut base_values = Vec::with_capacity(set.len());
    for (t, plane) in set.planes.iter().enumerate() {
        let v = plane.value(x0.entries());
        base_values.push(v);
        if v.abs() > tol_active * (1.0 + plane.phi_l1() * xinf) {
            indices.push(t);
        } else if plane.kind == PlaneKind::RealRoot {
            return Err(Error::Inconsistent(format!(
                "base point lies on the hyperplane of real root {} of N_p, so it is not coprime to N_p",
                plane.source_root.re
            )));
        } else {
            warn!(
                "hyperplane {t} ({:?} of root {}) passes through the base point; excluded",
                plane.kind, plane.source_root
            );
            excluded.push(t);
        }
    }
    Ok(ActiveSet {
        indices,
        excluded,
        base_values,
    })
}

/// The fixed blocks `[P_1; P_2] = T_n(N_p)` of `Δ(x)`.
#[derive(Clone, Debug)]
pub struct DeltaFactors {
    pub n: usize,
    pub p1: DMatrix<f64>,
    /// Upper triangular with `N_p(0)` on the diagonal.
    pub p2: DMatrix<f64>,
}

impl DeltaFactors {
    pub fn new(np: &Polynomial, n: usize) -> Result<Self> {
        if np.coeff(0) == 0.0 {
            return Err(Error::Precondition("Δ(x) needs N_p(0) ≠ 0".into()));
        }
        let t = toeplitz_stack(np, n)?;
        Ok(Self {
            n,
            p1: t.rows(0, n).into_owned(),
            p2: t.rows(n, n).into_owned(),
        })
    }

    /// `Δ(x) = Δ_1(x) - P_1 P_2^{-1} Δ_2(x)` with `[Δ_1; Δ_2] = T_n(p_x)`.
    pub fn delta(&self, x: &CoeffVector) -> DMatrix<f64> {
        let n = self.n;
        let t = toeplitz_stack(&x.to_monic_polynomial(), n).expect("deg p_x = n");
        let d1 = t.rows(0, n).into_owned();
        let d2 = t.rows(n, n).into_owned();
        let x2 = self.p2.solve_upper_triangular(&d2).expect("P2 diagonal is N_p(0) ≠ 0");
        d1 - &self.p1 * x2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Only `round(x_0)`.
    Round,
    /// `round(x_0)`, then integer shells around it.
    Search,
    /// The constructive recentred candidate, then shells around it.
    Fallback,
    /// Search, then fallback.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetConfig {
    pub mode: TargetMode,
    /// Largest Chebyshev radius explored around a centre.
    pub max_radius: u32,
    /// Points sampled along the segment `x_0 → x⋆`, endpoints included.
    pub segment_samples: usize,
    /// Try `x⋆ = 0` first (all controller poles at the origin when it works).
    pub prefer_zero: bool,
    /// Budget of candidates examined per search stage.
    pub max_candidates: usize,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            mode: TargetMode::Auto,
            max_radius: 8,
            segment_samples: 64,
            prefer_zero: false,
            max_candidates: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetStrategy {
    Zero,
    Round,
    Shell { radius: u32 },
    Fallback { radius: u32, delta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetOutcome {
    pub xstar: Vec<i64>,
    pub strategy: TargetStrategy,
    pub examined: usize,
    /// Smallest relative same-side margin over the active planes.
    pub margin: f64,
}

impl TargetOutcome {
    pub fn vector(&self) -> CoeffVector {
        CoeffVector::from_integers(&self.xstar)
    }
}

struct SideTest<'a> {
    x0: &'a [f64],
    set: &'a HyperplaneSet,
    active: &'a ActiveSet,
    samples: usize,
    tol_side: f64,
}

impl SideTest<'_> {
    /// Relative margin of `cand` if it is admissible.
    fn check(&self, cand: &[f64]) -> Option<f64> {
        let cinf = cand.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut margin = f64::INFINITY;
        for &t in &self.active.indices {
            let plane = &self.set.planes[t];
            let base = self.active.base_values[t];
            let v = plane.value(cand);
            let rel = v.abs() / (1.0 + plane.phi_l1() * cinf);
            if base * v <= 0.0 || rel <= self.tol_side {
                return None;
            }
            margin = margin.min(rel);
        }
        let steps = self.samples.max(2) - 1;
        let mut point = vec![0.0; cand.len()];
        for i in 1..steps {
            let rho = i as f64 / steps as f64;
            for (p, (a, b)) in point.iter_mut().zip(self.x0.iter().zip(cand)) {
                *p = a + rho * (b - a);
            }
            for &t in &self.active.indices {
                if self.active.base_values[t] * self.set.planes[t].value(&point) <= 0.0 {
                    return None;
                }
            }
        }
        Some(margin)
    }
}

/// Integer points at Chebyshev distance exactly `radius` from `center`, in
/// lexicographic order of the offset.
fn for_each_on_shell(center: &[i64], radius: u32, mut visit: impl FnMut(&[i64]) -> bool) -> bool {
    let n = center.len();
    let r = radius as i64;
    if radius == 0 || n == 0 {
        return radius == 0 && visit(center);
    }
    let mut offset = vec![-r; n];
    let mut point = vec![0i64; n];
    loop {
        if offset.iter().any(|o| o.abs() == r) {
            for (p, (c, o)) in point.iter_mut().zip(center.iter().zip(&offset)) {
                *p = c + o;
            }
            if visit(&point) {
                return true;
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if offset[i] < r {
                offset[i] += 1;
                break;
            }
            offset[i] = -r;
        }
    }
}

const MAX_EXACT_INT: f64 = 4_503_599_627_370_496.0; // 2^52

fn round_vector(x: &[f64]) -> Result<Vec<i64>> {
    x.iter()
        .map(|v| {
            let r = v.round();
            if r.is_finite() && r.abs() < MAX_EXACT_INT {
                Ok(r as i64)
            } else {
                Err(Error::TargetNotFound(format!(
                    "candidate entry {v} is not representable"
                )))
            }
        })
        .collect()
}

fn to_f64(x: &[i64]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).collect()
}

/// Shell search `0..=max_radius` around `center`; returns the first
/// admissible point and its radius.
fn shell_search(
    test: &SideTest<'_>,
    center: &[i64],
    first_radius: u32,
    cfg: &TargetConfig,
    examined: &mut usize,
) -> Option<(Vec<i64>, u32, f64)> {
    let budget_start = *examined;
    for radius in first_radius..=cfg.max_radius {
        let mut found = None;
        let exhausted = for_each_on_shell(center, radius, |cand| {
            *examined += 1;
            if *examined - budget_start > cfg.max_candidates {
                return true;
            }
            if let Some(m) = test.check(&to_f64(cand)) {
                found = Some((cand.to_vec(), m));
                return true;
            }
            false
        });
        if let Some((x, m)) = found {
            return Some((x, radius, m));
        }
        if exhausted {
            return None;
        }
    }
    None
}

/// Find `x⋆ ∈ Zⁿ` with `(φ_tᵀx_0 - ψ_t)(φ_tᵀx⋆ - ψ_t) > 0` for every
/// active `t`, the sign also holding at sampled points of the segment.
pub fn find_integer_target(
    x0: &CoeffVector,
    set: &HyperplaneSet,
    active: &ActiveSet,
    cfg: &TargetConfig,
    tol_side: f64,
) -> Result<TargetOutcome> {
    let test = SideTest {
        x0: x0.entries(),
        set,
        active,
        samples: cfg.segment_samples,
        tol_side,
    };
    let mut examined = 0usize;

    if cfg.prefer_zero {
        examined += 1;
        let zero = vec![0i64; x0.dim()];
        if let Some(margin) = test.check(&to_f64(&zero)) {
            return Ok(TargetOutcome {
                xstar: zero,
                strategy: TargetStrategy::Zero,
                examined,
                margin,
            });
        }
    }

    let rounded = round_vector(x0.entries())?;
    if matches!(cfg.mode, TargetMode::Round | TargetMode::Search | TargetMode::Auto) {
        examined += 1;
        if let Some(margin) = test.check(&to_f64(&rounded)) {
            return Ok(TargetOutcome {
                xstar: rounded,
                strategy: TargetStrategy::Round,
                examined,
                margin,
            });
        }
    }
    if matches!(cfg.mode, TargetMode::Search | TargetMode::Auto) {
        if let Some((xstar, radius, margin)) = shell_search(&test, &rounded, 1, cfg, &mut examined) {
            return Ok(TargetOutcome {
                xstar,
                strategy: TargetStrategy::Shell { radius },
                examined,
                margin,
            });
        }
    }
    if cfg.mode == TargetMode::Round {
        return Err(Error::TargetNotFound(format!(
            "round(x0) = {rounded:?} violates the same-side condition"
        )));
    }
    if cfg.mode == TargetMode::Search {
        return Err(Error::TargetNotFound(format!(
            "no admissible point within radius {} of round(x0) = {rounded:?}",
            cfg.max_radius
        )));
    }

    // Recentre: with p_v = z^{n - deg N_p} N_p / c on every hyperplane and
    // B_δ(x0) inside the admissible region, B_1((x0 - v)/δ + v) is too.
    let n = set.n;
    let np_monic = set.roots.reconstruct().monic();
    let dn = np_monic.degree().unwrap_or(0);
    let v = CoeffVector::from_monic_polynomial(&np_monic.shift(n - dn), n, 1e-9)?;
    let delta = active
        .indices
        .iter()
        .map(|&t| active.base_values[t].abs() / set.planes[t].phi_l1())
        .fold(f64::INFINITY, f64::min);
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::TargetNotFound(format!("degenerate ball radius δ = {delta}")));
    }
    let center_real: Vec<f64> = x0
        .entries()
        .iter()
        .zip(v.entries())
        .map(|(x, vv)| (x - vv) / delta + vv)
        .collect();
    let center = round_vector(&center_real)?;
    match shell_search(&test, &center, 0, cfg, &mut examined) {
        Some((xstar, radius, margin)) => Ok(TargetOutcome {
            xstar,
            strategy: TargetStrategy::Fallback { radius, delta },
            examined,
            margin,
        }),
        None => Err(Error::TargetNotFound(format!(
            "fallback candidate {center:?} (δ = {delta:e}) and its shells up to radius {} all fail",
            cfg.max_radius
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlStep {
    pub u: CoeffVector,
    /// `x⋆` is reached this step; the caller assigns it exactly.
    pub hit: bool,
    /// `‖Δ(x_k)^{-1}(x⋆ - x_k)‖₁`.
    pub direction_norm: f64,
}

/// Bounded input: the full step when its 1-norm is below one, otherwise the
/// same direction rescaled to 1-norm `μ`.
pub fn control_input(xk: &CoeffVector, xstar: &CoeffVector, delta: &DMatrix<f64>, mu: f64) -> Result<ControlStep> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Precondition(format!("μ = {mu} is outside (0, 1)")));
    }
    let rhs = xstar.sub(xk).to_dvector();
    let d = solve_linear(delta, &rhs).map_err(|e| match e {
        Error::Singular { pivot } => Error::Inconsistent(format!(
            "Δ(x_k) is singular (pivot {pivot:e}); the state left the admissible segment"
        )),
        other => other,
    })?;
    let norm = d.iter().map(|v| v.abs()).sum::<f64>();
    if norm < 1.0 {
        Ok(ControlStep {
            u: CoeffVector::from_dvector(&d),
            hit: true,
            direction_norm: norm,
        })
    } else {
        Ok(ControlStep {
            u: CoeffVector::from_dvector(&(d * (mu / norm))),
            hit: false,
            direction_norm: norm,
        })
    }
}

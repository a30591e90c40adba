//! Dense linear algebra, root finding and Schur stability.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::tolerance::Tolerances;

/// Solve `A x = b` by LU with partial pivoting.
///
/// A pivot below `m · ε · max|A|` is reported as [`Error::Singular`].
pub fn solve_linear(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let m = a.nrows();
    if a.ncols() != m || b.len() != m {
        return Err(Error::Dimension(format!(
            "system {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if m == 0 {
        return Ok(DVector::zeros(0));
    }
    let scale = a.amax();
    let lu = a.clone().lu();
    let u = lu.u();
    let pivot = u.diagonal().iter().fold(f64::INFINITY, |p, d| p.min(d.abs()));
    if scale == 0.0 || pivot <= m as f64 * f64::EPSILON * scale {
        return Err(Error::Singular { pivot });
    }
    lu.solve(b).ok_or(Error::Singular { pivot })
}

/// Induced 1-norm: largest absolute column sum.
pub fn induced_1norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_1norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// 2-norm condition number `σ_max / σ_min` (infinite when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Ratio of smallest to largest singular value; zero for a singular matrix.
pub fn singular_ratio(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

const MAX_SCHUR_ITERS: usize = 10_000;

/// All roots of `p`, with multiplicity, to the default root tolerance.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>> {
    poly_roots_tol(p, Tolerances::default().root)
}

/// All roots of `p` from the eigenvalues of its balanced companion matrix,
/// each refined by Newton steps that are kept only when they reduce `|p(r)|`.
///
/// Every root must satisfy `|p(r)| ≤ tol_root · Σ|c_i||r|^i`.
pub fn poly_roots_tol(p: &Polynomial, tol_root: f64) -> Result<Vec<Complex64>> {
    let degree = p
        .degree()
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::Precondition("root finding needs degree ≥ 1".into()))?;

    let zeros = p.low_order_zeros(0.0);
    let q = p.unshift(zeros);
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let d = degree - zeros;
    match d {
        0 => return Ok(roots),
        1 => {
            roots.push(Complex64::new(-q.coeff(0) / q.coeff(1), 0.0));
            return Ok(roots);
        }
        _ => {}
    }

    let lead = q.leading();
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        companion[(0, j)] = -q.coeff(d - 1 - j) / lead;
    }
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    balance(&mut companion);
    let schur = Schur::try_new(companion, f64::EPSILON, MAX_SCHUR_ITERS).ok_or(Error::RootsNotConverged {
        max_residual: f64::INFINITY,
    })?;
    let eig = schur.complex_eigenvalues();

    let dq = derivative(&q);
    let mut worst: f64 = 0.0;
    for &z0 in eig.iter() {
        let z = polish(&q, &dq, z0);
        let scale = q.abs_eval(z);
        let rel = if scale > 0.0 { q.eval(z).norm() / scale } else { 0.0 };
        worst = worst.max(rel);
        roots.push(z);
    }
    if worst > tol_root {
        return Err(Error::RootsNotConverged { max_residual: worst });
    }
    Ok(roots)
}

fn derivative(p: &Polynomial) -> Polynomial {
    Polynomial::from_ascending(
        p.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| i as f64 * c)
            .collect(),
    )
}

fn polish(p: &Polynomial, dp: &Polynomial, mut z: Complex64) -> Complex64 {
    let mut best = p.eval(z).norm();
    for _ in 0..4 {
        let d = dp.eval(z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - p.eval(z) / d;
        let val = p.eval(cand).norm();
        if val.is_nan() || val >= best {
            break;
        }
        best = val;
        z = cand;
    }
    z
}

/// Parlett–Reinsch diagonal similarity balancing, radix 2.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// Roots of a real polynomial split into real roots and conjugate pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub real_roots: Vec<f64>,
    /// One representative per pair, with positive imaginary part.
    pub complex_pairs: Vec<Complex64>,
    pub leading_coeff: f64,
}

impl RootSet {
    pub fn degree(&self) -> usize {
        self.real_roots.len() + 2 * self.complex_pairs.len()
    }

    /// `c · ∏(z - λ_j) · ∏(z - η_j)(z - η_j*)`.
    pub fn reconstruct(&self) -> Polynomial {
        let mut p = Polynomial::constant(self.leading_coeff);
        for &l in &self.real_roots {
            p = &p * &Polynomial::linear(l);
        }
        for eta in &self.complex_pairs {
            let quad = Polynomial::from_ascending(vec![eta.norm_sqr(), -2.0 * eta.re, 1.0]);
            p = &p * &quad;
        }
        p
    }
}

/// Collapse near-real roots to real ones and match the rest into conjugate
/// pairs, nearest partner first. Output is sorted for determinism.
pub fn classify_roots(roots: &[Complex64], tol_imag: f64, tol_conj: f64) -> Result<RootSet> {
    let mut real_roots = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &r in roots {
        if r.im.abs() <= tol_imag * (1.0 + r.norm()) {
            real_roots.push(r.re);
        } else if r.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    let mut complex_pairs = Vec::with_capacity(upper.len());
    for u in upper {
        let target = u.conj();
        let best = lower
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
            .map(|(i, l)| (i, (l - target).norm()));
        match best {
            Some((i, dist)) if dist <= tol_conj * (1.0 + u.norm()) => {
                let l = lower.swap_remove(i);
                complex_pairs.push((u + l.conj()) / 2.0);
            }
            _ => return Err(Error::ConjugatePairing { re: u.re, im: u.im }),
        }
    }
    if let Some(l) = lower.first() {
        return Err(Error::ConjugatePairing { re: l.re, im: l.im });
    }
    real_roots.sort_by(f64::total_cmp);
    complex_pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(RootSet {
        real_roots,
        complex_pairs,
        leading_coeff: 1.0,
    })
}

/// Factor a real polynomial into a [`RootSet`].
pub fn factor(p: &Polynomial, tol: &Tolerances) -> Result<RootSet> {
    let roots = poly_roots_tol(p, tol.root)?;
    let mut set = classify_roots(&roots, tol.imag, tol.conj)?;
    set.leading_coeff = p.leading();
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchurReport {
    pub is_schur: bool,
    pub spectral_radius: f64,
    /// Radius lies in `[1 - margin, 1)`: stable in exact arithmetic but
    /// rejected here.
    pub near_boundary: bool,
}

/// Spectral radius and Schur stability (`radius < 1 - tol_margin`).
/// Constants are vacuously Schur.
pub fn schur_check(p: &Polynomial, tol_margin: f64) -> Result<SchurReport> {
    let spectral_radius = match p.degree() {
        None => return Err(Error::Precondition("Schur test of the zero polynomial".into())),
        Some(0) => 0.0,
        Some(_) => poly_roots(p)?.iter().fold(0.0_f64, |m, r| m.max(r.norm())),
    };
    let is_schur = spectral_radius < 1.0 - tol_margin;
    Ok(SchurReport {
        is_schur,
        spectral_radius,
        near_boundary: !is_schur && spectral_radius < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_diagonal_solves() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(solve_linear(&DMatrix::identity(3, 3), &b).unwrap(), b);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let x = solve_linear(&a, &DVector::from_vec(vec![2.0, 8.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn singular_solve_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = solve_linear(&a, &DVector::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::Singular { pivot } if pivot < 1e-12));
    }

    #[test]
    fn one_norms() {
        assert_eq!(induced_1norm(&DMatrix::identity(3, 3)), 1.0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 4.0]);
        assert_eq!(induced_1norm(&m), 6.0);
        assert_eq!(vec_1norm(&[1.0, -2.5]), 3.5);
    }

    #[test]
    fn simple_roots() {
        let mut r = poly_roots(&Polynomial::from_ascending(vec![1.0, 0.0, 1.0])).unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-12);

        let mut r = poly_roots(&Polynomial::from_ascending(vec![2.0, -3.0, 1.0])).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_roots_are_exact() {
        let p = Polynomial::monomial(5, 1.0);
        let r = poly_roots(&p).unwrap();
        assert_eq!(r, vec![c(0.0, 0.0); 5]);
    }

    #[test]
    fn roots_of_constant_are_rejected() {
        assert!(poly_roots(&Polynomial::constant(2.0)).is_err());
    }

    #[test]
    fn classify_simple_sets() {
        let s = classify_roots(&[c(1.0, 0.0), c(-2.0, 0.0)], 1e-8, 1e-6).unwrap();
        assert_eq!((s.real_roots.len(), s.complex_pairs.len()), (2, 0));
        let s = classify_roots(&[c(0.0, 1.0), c(0.0, -1.0)], 1e-8, 1e-6).unwrap();
        assert_eq!(s.real_roots.len(), 0);
        assert_eq!(s.complex_pairs, vec![c(0.0, 1.0)]);
    }

    #[test]
    fn classify_rejects_unpaired() {
        let err = classify_roots(&[c(0.5, 0.5), c(0.5, -0.4)], 1e-8, 1e-6).unwrap_err();
        assert!(matches!(err, Error::ConjugatePairing { .. }));
    }

    #[test]
    fn schur_edge_cases() {
        let r = schur_check(&Polynomial::monomial(6, 1.0), 1e-9).unwrap();
        assert!(r.is_schur);
        assert_eq!(r.spectral_radius, 0.0);

        let r = schur_check(&Polynomial::linear(1.0), 1e-9).unwrap();
        assert!(!r.is_schur);
        assert!((r.spectral_radius - 1.0).abs() < 1e-15);

        assert!(schur_check(&Polynomial::constant(3.0), 1e-9).unwrap().is_schur);

        let r = schur_check(&Polynomial::linear(1.0 - 1e-12), 1e-9).unwrap();
        assert!(!r.is_schur && r.near_boundary);
    }
}

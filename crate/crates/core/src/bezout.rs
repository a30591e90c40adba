//! Polynomial Diophantine equations against a fixed plant numerator.
//!
//! [`f_map`] solves `p·r + s·N_p = q` with `deg s < deg p` by one dense solve
//! in the unknown coefficients of `r` and `s`. The system is square and
//! nonsingular exactly when `p` and `N_p` are coprime.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{singular_ratio, solve_linear};
use crate::poly::Polynomial;

/// Solution `(r, s)` of `p·r + s·N_p = q`.
#[derive(Clone, Debug, PartialEq)]
pub struct FMap {
    pub r: Polynomial,
    pub s: Polynomial,
    /// `max|p·r + s·N_p - q|` divided by the identity scale.
    pub residual: f64,
}

/// Scale of an identity `Σ terms = 0`: the largest coefficient of any term.
pub(crate) fn identity_scale(terms: &[&Polynomial]) -> f64 {
    terms.iter().fold(0.0, |m, t| m.max(t.max_abs()))
}

/// Fill `out[:, col..col+count]` with shifted copies of `p` (ascending rows).
fn place_shifts(out: &mut DMatrix<f64>, p: &Polynomial, col: usize, count: usize) {
    for j in 0..count {
        for (i, &c) in p.coeffs().iter().enumerate() {
            out[(i + j, col + j)] = c;
        }
    }
}

/// The mapping `F(p, q) = r` where `p·r + s·N_p = q` and `deg s < deg p`.
///
/// Requires `deg q ≥ deg p` and `deg N_p ≤ deg q - deg p + 1`, the range in
/// which the coefficient system is square. When additionally
/// `deg N_p ≤ deg q - deg p` and both `p`, `q` are monic, `r` is monic of
/// degree `deg q - deg p`.
pub fn f_map(p: &Polynomial, q: &Polynomial, np: &Polynomial, tol_residual: f64) -> Result<FMap> {
    let (Some(dp), Some(dq), Some(dn)) = (p.degree(), q.degree(), np.degree()) else {
        return Err(Error::Precondition("F-mapping needs nonzero p, q and N_p".into()));
    };
    if dq < dp {
        return Err(Error::Precondition(format!(
            "F-mapping needs deg q ≥ deg p (got {dq} < {dp})"
        )));
    }
    if dn > dq - dp + 1 {
        return Err(Error::Precondition(format!(
            "F-mapping needs deg N_p ≤ deg q - deg p + 1 (got {dn} > {})",
            dq - dp + 1
        )));
    }
    let m = dq + 1;
    let nr = dq - dp + 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    place_shifts(&mut a, p, 0, nr);
    place_shifts(&mut a, np, nr, dp);
    let b = DVector::from_iterator(m, (0..m).map(|i| q.coeff(i)));
    let sol = solve_linear(&a, &b).map_err(|e| match e {
        Error::Singular { .. } => Error::NotCoprime {
            quality: coprime_check(p, np, 0.0).quality,
        },
        other => other,
    })?;
    let r = Polynomial::from_ascending(sol.rows(0, nr).iter().copied().collect());
    let s = Polynomial::from_ascending(sol.rows(nr, dp).iter().copied().collect());

    let pr = p * &r;
    let snp = &s * np;
    let diff = &(&pr + &snp) - q;
    let scale = identity_scale(&[&pr, &snp, q]);
    let residual = if scale > 0.0 { diff.max_abs() / scale } else { 0.0 };
    if residual > tol_residual {
        return Err(Error::NumericalBreakdown {
            what: "F-mapping identity",
            residual,
            tolerance: tol_residual,
        });
    }
    Ok(FMap { r, s, residual })
}

/// Bézout pair `(u, v)` with `u·D_p + v·N_p = 1`, `deg u < deg N_p`,
/// `deg v < deg D_p`.
pub fn bezout_identity(dp: &Polynomial, np: &Polynomial) -> Result<(Polynomial, Polynomial)> {
    let (Some(ddp), Some(dnp)) = (dp.degree(), np.degree()) else {
        return Err(Error::Precondition("Bézout identity needs nonzero polynomials".into()));
    };
    if dnp == 0 {
        return Ok((Polynomial::zero(), Polynomial::constant(1.0 / np.coeff(0))));
    }
    if ddp == 0 {
        return Ok((Polynomial::constant(1.0 / dp.coeff(0)), Polynomial::zero()));
    }
    let m = ddp + dnp;
    let mut a = DMatrix::<f64>::zeros(m, m);
    place_shifts(&mut a, dp, 0, dnp);
    place_shifts(&mut a, np, dnp, ddp);
    let mut b = DVector::zeros(m);
    b[0] = 1.0;
    let sol = solve_linear(&a, &b).map_err(|_| Error::NotCoprime {
        quality: coprime_check(dp, np, 0.0).quality,
    })?;
    let u = Polynomial::from_ascending(sol.rows(0, dnp).iter().copied().collect());
    let v = Polynomial::from_ascending(sol.rows(dnp, ddp).iter().copied().collect());
    Ok((u, v))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coprimality {
    pub coprime: bool,
    /// `σ_min / σ_max` of the Sylvester matrix of the max-normalized pair.
    pub quality: f64,
}

/// Sylvester matrix whose columns are the shifts `z^j a` (`j < deg b`) and
/// `z^j b` (`j < deg a`); it is singular iff `a` and `b` share a root.
pub fn sylvester_matrix(a: &Polynomial, b: &Polynomial) -> DMatrix<f64> {
    let da = a.degree().unwrap_or(0);
    let db = b.degree().unwrap_or(0);
    let m = da + db;
    let mut s = DMatrix::<f64>::zeros(m, m);
    place_shifts(&mut s, a, 0, db);
    place_shifts(&mut s, b, db, da);
    s
}

/// Coprimality measured on the Sylvester matrix.
pub fn coprime_check(a: &Polynomial, b: &Polynomial, tol_coprime: f64) -> Coprimality {
    if a.is_zero() || b.is_zero() {
        return Coprimality {
            coprime: false,
            quality: 0.0,
        };
    }
    let an = a.scale(1.0 / a.max_abs());
    let bn = b.scale(1.0 / b.max_abs());
    let quality = singular_ratio(&sylvester_matrix(&an, &bn));
    Coprimality {
        coprime: quality > tol_coprime,
        quality,
    }
}

/// Coprimality of `b` with a polynomial given by its roots: the smallest
/// relative value `|b(r)| / Σ|b_i||r|^i` over `roots`. For a monomial this
/// reduces to `b(0) ≠ 0`, where the Sylvester ratio would decay like
/// `|b(0)|^{deg}`.
pub fn coprime_with_roots(roots: &[Complex64], b: &Polynomial, tol_coprime: f64) -> Coprimality {
    if b.is_zero() {
        return Coprimality {
            coprime: false,
            quality: 0.0,
        };
    }
    let quality = roots
        .iter()
        .map(|&r| {
            let scale = b.abs_eval(r);
            if scale > 0.0 {
                b.eval(r).norm() / scale
            } else {
                0.0
            }
        })
        .fold(1.0_f64, f64::min);
    Coprimality {
        coprime: quality > tol_coprime,
        quality,
    }
}

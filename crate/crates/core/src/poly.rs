//! Real univariate polynomials and the bridge to coefficient space.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Real polynomial with ascending coefficient storage: `coeffs[i]` multiplies `z^i`.
///
/// The coefficient vector never ends in an exact zero, so the zero polynomial
/// has no coefficients and no degree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_ascending(vec![c])
    }

    /// `c · z^degree`.
    pub fn monomial(degree: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = c;
        Self::from_ascending(coeffs)
    }

    /// The monic linear factor `z - root`.
    pub fn linear(root: f64) -> Self {
        Self::from_ascending(vec![-root, 1.0])
    }

    pub fn from_ascending(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Build from the printed order, highest power first.
    pub fn from_descending(coeffs: &[f64]) -> Self {
        Self::from_ascending(coeffs.iter().rev().copied().collect())
    }

    /// Real monic polynomial `∏ (z - r)`. The roots must be closed under
    /// conjugation; the imaginary residue of the expansion is discarded.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            acc = next;
        }
        Self::from_ascending(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn to_descending(&self) -> Vec<f64> {
        self.coeffs.iter().rev().copied().collect()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial mapped to `-1`, convenient for
    /// degree-gap comparisons.
    pub fn degree_or_neg(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `z^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_monic(&self, tol: f64) -> bool {
        !self.is_zero() && (self.leading() - 1.0).abs() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_ascending(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let lead = self.leading();
        let mut p = self.scale(1.0 / lead);
        // exact 1 so downstream monic checks never see rounding
        if let Some(last) = p.coeffs.last_mut() {
            *last = 1.0;
        }
        p
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }

    /// Number of leading low-order coefficients with `|c| ≤ tol_abs`,
    /// i.e. the largest `l` such that `z^l` divides the polynomial to tolerance.
    pub fn low_order_zeros(&self, tol_abs: f64) -> usize {
        self.coeffs.iter().take_while(|c| c.abs() <= tol_abs).count()
    }

    /// Drop the `l` lowest coefficients (divide by `z^l`, discarding them).
    pub fn unshift(&self, l: usize) -> Self {
        Self::from_ascending(self.coeffs.iter().skip(l).copied().collect())
    }

    /// Drop leading coefficients with `|c| ≤ rel · max|c|`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let cut = rel * self.max_abs();
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.abs() <= cut) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Keep only the coefficients of `z^0 … z^(len-1)`.
    pub fn truncated(&self, len: usize) -> Self {
        Self::from_ascending(self.coeffs.iter().take(len).copied().collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn eval_real(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// `Σ |c_i| |z|^i`, the natural scale of `|p(z)|`.
    pub fn abs_eval(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    /// Largest distance of any coefficient from the nearest integer.
    pub fn integer_deviation(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max((c - c.round()).abs()))
    }

    /// Snap every coefficient to the nearest integer.
    pub fn rounded(&self) -> Self {
        Self::from_ascending(self.coeffs.iter().map(|c| c.round()).collect())
    }
}

/// Serialized as a descending coefficient list, highest power first.
impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_descending().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(Self::from_descending(&v))
    }
}

fn combine(a: &Polynomial, b: &Polynomial, sign: f64) -> Polynomial {
    let len = a.coeffs.len().max(b.coeffs.len());
    Polynomial::from_ascending((0..len).map(|i| a.coeff(i) + sign * b.coeff(i)).collect())
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        combine(self, rhs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        combine(self, rhs, -1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        poly_mul(self, rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                _ if a == 1.0 => {}
                _ => write!(f, "{a}")?,
            }
            match i {
                0 => {}
                1 => write!(f, "z")?,
                _ => write!(f, "z^{i}")?,
            }
        }
        Ok(())
    }
}

/// Convolution product.
pub fn poly_mul(a: &Polynomial, b: &Polynomial) -> Polynomial {
    if a.is_zero() || b.is_zero() {
        return Polynomial::zero();
    }
    let mut out = vec![0.0; a.coeffs.len() + b.coeffs.len() - 1];
    for (i, &x) in a.coeffs.iter().enumerate() {
        for (j, &y) in b.coeffs.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    Polynomial::from_ascending(out)
}

/// Long division `num = q·den + rem` with `deg rem < deg den`.
pub fn poly_divmod(num: &Polynomial, den: &Polynomial) -> Result<(Polynomial, Polynomial)> {
    let dd = den.degree().ok_or(Error::DivisionByZero)?;
    let Some(dn) = num.degree() else {
        return Ok((Polynomial::zero(), Polynomial::zero()));
    };
    if dn < dd {
        return Ok((Polynomial::zero(), num.clone()));
    }
    let lead = den.leading();
    let mut rem = num.coeffs.clone();
    let mut quot = vec![0.0; dn - dd + 1];
    for k in (0..=dn - dd).rev() {
        let q = rem[k + dd] / lead;
        quot[k] = q;
        for (j, &d) in den.coeffs.iter().enumerate() {
            rem[k + j] -= q * d;
        }
        rem[k + dd] = 0.0;
    }
    rem.truncate(dd);
    Ok((Polynomial::from_ascending(quot), Polynomial::from_ascending(rem)))
}

/// The `2n × n` stacked Toeplitz matrix whose column `j` (1-based) holds the
/// coefficients of `a` in descending order, shifted down by `j - 1`; entry
/// `(i, j)` is `a_{n-i+j}`.
///
/// Multiplying it by the descending coefficient vector of a polynomial `b`
/// of degree below `n` gives the descending length-`2n` vector of `a·b`.
pub fn toeplitz_stack(a: &Polynomial, n: usize) -> Result<DMatrix<f64>> {
    if let Some(d) = a.degree() {
        if d > n {
            return Err(Error::DegreeTooLarge { degree: d, n });
        }
    }
    Ok(DMatrix::from_fn(2 * n, n, |i, j| {
        let k = n as i64 - i as i64 + j as i64;
        if k < 0 {
            0.0
        } else {
            a.coeff(k as usize)
        }
    }))
}

/// Real vector of length `n` in descending order `[x_{n-1}, …, x_0]`,
/// identified with the monic polynomial `z^n + x_{n-1} z^{n-1} + … + x_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffVector(Vec<f64>);

impl CoeffVector {
    pub fn new(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_integers(entries: &[i64]) -> Self {
        Self(entries.iter().map(|&v| v as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.0
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub fn from_dvector(v: &DVector<f64>) -> Self {
        Self(v.iter().copied().collect())
    }

    /// `p_x(z) = z^n + x_{n-1} z^{n-1} + … + x_0`.
    pub fn to_monic_polynomial(&self) -> Polynomial {
        let mut coeffs: Vec<f64> = self.0.iter().rev().copied().collect();
        coeffs.push(1.0);
        Polynomial::from_ascending(coeffs)
    }

    /// Inverse of [`to_monic_polynomial`](Self::to_monic_polynomial): the
    /// polynomial must be monic (within `tol_monic`) of degree exactly `n`.
    pub fn from_monic_polynomial(p: &Polynomial, n: usize, tol_monic: f64) -> Result<Self> {
        if p.degree() != Some(n) || !p.is_monic(tol_monic) {
            return Err(Error::NotMonic {
                expected: n,
                found: p.to_string(),
            });
        }
        Ok(Self((0..n).rev().map(|i| p.coeff(i)).collect()))
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn linf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(a, b)| a * b).sum()
    }
}

impl From<Vec<f64>> for CoeffVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Rational function `num/den`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Self {
        Self { num, den }
    }

    pub fn is_proper(&self) -> bool {
        self.num.degree_or_neg() <= self.den.degree_or_neg()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }
}

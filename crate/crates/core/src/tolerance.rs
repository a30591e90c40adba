//! Numerical tolerances shared by every module.
//!
//! None of these appear in the underlying theory, which is exact; they are
//! the guards that turn exact predicates (monic, coprime, Schur, integer)
//! into floating-point decisions.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Leading coefficient must be within this of 1.
    pub monic: f64,
    /// Polynomial-identity residual, relative to the identity's scale.
    pub residual: f64,
    /// Leading coefficients below `trim · max|c|` are dropped after subtraction.
    pub trim: f64,
    /// Roots with `|Im| ≤ imag · (1 + |root|)` are treated as real.
    pub imag: f64,
    /// Conjugate partners must agree within `conj · (1 + |root|)`.
    pub conj: f64,
    /// Relative backward residual accepted from the root finder.
    pub root: f64,
    /// Schur requires spectral radius `< 1 - margin`.
    pub margin: f64,
    /// Coprime requires Sylvester quality above this.
    pub coprime: f64,
    /// Hyperplane functionals below this (relative) leave the active set.
    pub active: f64,
    /// Minimum relative same-side margin for the integer target.
    pub side: f64,
    /// Coefficient distance from the nearest integer still counted as integer.
    pub int: f64,
    /// Residual bound used by certificates.
    pub certificate: f64,
    /// Transfer-function cross-multiplication mismatch bound.
    pub tf: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            monic: 1e-9,
            residual: 1e-10,
            trim: 1e-9,
            imag: 1e-8,
            conj: 1e-6,
            root: 1e-8,
            margin: 1e-9,
            coprime: 1e-8,
            active: 1e-9,
            side: 1e-9,
            int: 1e-6,
            certificate: 1e-8,
            tf: 1e-6,
        }
    }
}

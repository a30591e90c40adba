//! Synthesis of discrete-time controllers whose denominators are integer
//! monic polynomials.
//!
//! Two procedures are provided:
//!
//! * [`stabilizer`]: given a SISO plant `N_p/D_p`, find `(α, β, γ)` with
//!   `α·D_p + β·N_p = γ`, `α` integer monic, `γ` Schur and monic, and
//!   `deg β < deg α`. The controller `D_c = α`, `N_c = -β` stabilizes the
//!   plant and can be realized with an integer state matrix.
//! * [`converter`]: given a pre-designed two-input controller, build an
//!   integer-denominator controller with the same reference-to-output
//!   closed-loop transfer function.
//!
//! Both work in the coefficient space of degree-`n` monic polynomials, moving
//! a real starting point to an integer destination with bounded steps
//! `x_{k+1} = x_k + Δ(x_k)u_k`, every step multiplying a Schur factor into
//! the running closed-loop polynomial.
//!
//! Polynomials are stored with ascending powers everywhere except at the
//! [`poly::CoeffVector`] and Toeplitz boundary, where the descending order of
//! the coefficient-space formulation is used.

pub mod bezout;
pub mod cli;
pub mod converter;
pub mod error;
pub mod fixtures;
pub mod numeric;
pub mod poly;
pub mod sim;
pub mod stabilizer;
pub mod target;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use poly::{CoeffVector, Polynomial, TransferFunction};
pub use tolerance::Tolerances;

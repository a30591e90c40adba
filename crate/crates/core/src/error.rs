use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZero,

    #[error("polynomial degree {degree} exceeds Toeplitz dimension {n}")]
    DegreeTooLarge { degree: usize, n: usize },

    #[error("expected a monic polynomial of degree {expected}, got {found}")]
    NotMonic { expected: usize, found: String },

    #[error("matrix is singular to tolerance (smallest pivot {pivot:e})")]
    Singular { pivot: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("root finder did not converge (worst relative residual {max_residual:e})")]
    RootsNotConverged { max_residual: f64 },

    #[error("conjugate pairing failed for root {re}{im:+}i")]
    ConjugatePairing { re: f64, im: f64 },

    #[error("polynomials are not coprime to tolerance (quality {quality:e})")]
    NotCoprime { quality: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("no admissible integer target: {0}")]
    TargetNotFound(String),

    #[error("iteration cap {cap} reached with ‖x⋆ - x_k‖₁ = {distance:e}")]
    IterationCap { cap: usize, distance: f64 },

    #[error("numerical breakdown in {what}: residual {residual:e} exceeds {tolerance:e}")]
    NumericalBreakdown {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("improper transfer function (numerator degree {num} > denominator degree {den})")]
    Improper { num: usize, den: usize },

    #[error("algebraic loop: plant and controller both have direct feedthrough")]
    AlgebraicLoop,
}

pub type Result<T> = std::result::Result<T, Error>;

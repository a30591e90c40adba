//! Reference data: a linearized cart-pendulum plant under a 50 ms
//! zero-order hold, with the design inputs and expected outcomes used by the
//! tests and the shipped JSON problem files.
//!
//! All coefficient lists are descending (highest power first).

use num_complex::Complex64;

use crate::bezout::f_map;
use crate::error::Result;
use crate::poly::Polynomial;
use crate::verify::ControllerPolys;

/// Plant denominator, four decimals.
pub const PENDULUM_DEN: [f64; 5] = [1.0, -4.0757, 6.1423, -4.0581, 0.9915];
/// Plant numerator, four decimals.
pub const PENDULUM_NUM: [f64; 4] = [0.0021, -0.0023, -0.0023, 0.0021];

/// The same plant at full double precision.
pub const PENDULUM_DEN_EXACT: [f64; 5] = [
    1.0,
    -4.075684602557429,
    6.142269775504165,
    -4.058084920765122,
    0.9914997478183861,
];
pub const PENDULUM_NUM_EXACT: [f64; 4] = [
    0.00213051410435128,
    -0.00228657251001074,
    -0.00226799334157057,
    0.00212446303269098,
];

/// Roots of the initial closed-loop polynomial for stabilization.
pub const GAMMA_INI_ROOTS: [(f64, f64); 8] = [
    (-0.2616, 0.0),
    (0.3728, 0.0),
    (0.6769, 0.6490),
    (0.6769, -0.6490),
    (0.9168, 0.1990),
    (0.9168, -0.1990),
    (0.9650, 0.1),
    (0.9650, -0.1),
];

/// Expected integer part of the stabilizing `D_c`, which carries a further `z^4`.
pub const STABILIZATION_ALPHA_CORE: [f64; 5] = [1.0, -1.0, -13.0, -4.0, 10.0];
pub const STABILIZATION_SHIFT: usize = 4;
/// Expected `N_c`, as printed to five significant digits.
pub const STABILIZATION_NC: [f64; 8] = [-6404.6, 17154.0, -14891.0, 3894.9, 272.28, -6.0466, -23.6399, 4.7839];
pub const STABILIZATION_RADIUS: f64 = 0.9701;

/// Two-input controller to be converted.
pub const PRE_DEN: [f64; 6] = [1.0, -2.8826, 0.1067, 0.4848, 3.8324, -2.5413];
pub const PRE_NUM_Y: [f64; 5] = [-1556.0, 5821.9, -8132.4, 5023.0, -1156.6];
pub const PRE_NUM_R: [f64; 5] = [-0.02, 0.0566, -0.0584, 0.0258, -0.0041];

/// Roots of the initial α for conversion.
pub const ALPHA0_ROOTS: [(f64, f64); 6] = [
    (-0.7493, 0.0),
    (-0.1861, 0.0),
    (-0.2412, 0.8757),
    (-0.2412, -0.8757),
    (-0.1373, 0.9794),
    (-0.1373, -0.9794),
];

/// Expected integer part of the converted `D_c′`, which carries a further `z^23`.
pub const CONVERSION_GAMMA_CORE: [f64; 5] = [1.0, -1.0, -4.0, -2.0, 4.0];
pub const CONVERSION_SHIFT: usize = 23;
pub const CONVERSION_ITERATIONS: usize = 4;

pub fn roots(list: &[(f64, f64)]) -> Vec<Complex64> {
    list.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

pub fn pendulum() -> (Polynomial, Polynomial) {
    (
        Polynomial::from_descending(&PENDULUM_DEN),
        Polynomial::from_descending(&PENDULUM_NUM),
    )
}

pub fn pendulum_exact() -> (Polynomial, Polynomial) {
    (
        Polynomial::from_descending(&PENDULUM_DEN_EXACT),
        Polynomial::from_descending(&PENDULUM_NUM_EXACT),
    )
}

pub fn pre_controller() -> ControllerPolys {
    ControllerPolys {
        den: Polynomial::from_descending(&PRE_DEN),
        num_y: Polynomial::from_descending(&PRE_NUM_Y),
        num_r: Polynomial::from_descending(&PRE_NUM_R),
    }
}

pub fn gamma_ini_roots() -> Vec<Complex64> {
    roots(&GAMMA_INI_ROOTS)
}

pub fn alpha0_roots() -> Vec<Complex64> {
    roots(&ALPHA0_ROOTS)
}

/// Closed-loop poles of [`placed_controller`].
pub const PLACED_POLES: [f64; 7] = [0.6, 0.6, 0.5, 0.5, 0.4, 0.4, 0.3];

/// Stable two-input controller for a plant by pole placement: `D_c`, `N_cy`
/// from `D_p D_c − N_p N_cy = ∏(z − p_i)` and a constant `N_cr` giving
/// `T_ry(1) = 1`.
pub fn placed_controller(dp: &Polynomial, np: &Polynomial, poles: &[f64]) -> Result<ControllerPolys> {
    let phi = Polynomial::from_roots(&poles.iter().map(|&r| Complex64::new(r, 0.0)).collect::<Vec<_>>());
    let f = f_map(dp, &phi, np, 1e-8)?;
    Ok(ControllerPolys {
        den: f.r,
        num_y: -&f.s,
        num_r: Polynomial::constant(phi.eval_real(1.0) / np.eval_real(1.0)),
    })
}

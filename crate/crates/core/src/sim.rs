//! State-space realizations and closed-loop simulation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{Polynomial, TransferFunction};
use crate::verify::ControllerPolys;

/// `x⁺ = A x + B v`, `w = C x + D v`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    fn validate(&self) -> Result<()> {
        let (n, m, p) = (self.states(), self.d.ncols(), self.d.nrows());
        if self.a.ncols() != n
            || self.b.nrows() != n
            || self.b.ncols() != m
            || self.c.ncols() != n
            || self.c.nrows() != p
        {
            return Err(Error::Dimension(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                self.a.nrows(),
                self.a.ncols(),
                self.b.nrows(),
                self.b.ncols(),
                self.c.nrows(),
                self.c.ncols(),
                p,
                m
            )));
        }
        Ok(())
    }
}

/// Monic denominator of degree `n`, numerators reduced below degree `n`,
/// and the direct terms split off.
fn split_proper(den: &Polynomial, nums: &[&Polynomial]) -> Result<(Polynomial, Vec<Polynomial>, Vec<f64>)> {
    let n = den
        .degree()
        .ok_or_else(|| Error::Precondition("denominator is zero".into()))?;
    let lead = den.leading();
    let den = den.monic();
    let mut reduced = Vec::with_capacity(nums.len());
    let mut direct = Vec::with_capacity(nums.len());
    for num in nums {
        if num.degree_or_neg() > n as i64 {
            return Err(Error::Improper {
                num: num.degree_or_neg() as usize,
                den: n,
            });
        }
        let num = num.scale(1.0 / lead);
        let d = num.coeff(n);
        let rest = (&num - &den.scale(d)).truncated(n);
        reduced.push(rest);
        direct.push(d);
    }
    Ok((den, reduced, direct))
}

/// Controllable canonical form of a SISO transfer function: ones on the
/// superdiagonal, negated denominator coefficients in the last row.
pub fn realize_tf(tf: &TransferFunction) -> Result<StateSpace> {
    let (den, nums, direct) = split_proper(&tf.den, &[&tf.num])?;
    let n = den.degree().unwrap_or(0);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -den.coeff(j);
    }
    let mut b = DMatrix::zeros(n, 1);
    if n > 0 {
        b[(n - 1, 0)] = 1.0;
    }
    let c = DMatrix::from_fn(1, n, |_, j| nums[0].coeff(j));
    Ok(StateSpace {
        a,
        b,
        c,
        d: DMatrix::from_element(1, 1, direct[0]),
    })
}

/// Realization of `D_c u = N_cy y + N_cr r` with inputs `[y, r]`.
///
/// The observable canonical form is used: its state matrix is the transpose
/// of the controllable companion matrix (so it is integer whenever `D_c` is)
/// and, with one shared state vector, it is minimal for both channels.
/// Separate controllable forms per input would leave the roots of `D_c` as
/// modes excited by `r` outside the feedback loop.
pub fn realize_controller(ctrl: &ControllerPolys) -> Result<StateSpace> {
    let (den, nums, direct) = split_proper(&ctrl.den, &[&ctrl.num_y, &ctrl.num_r])?;
    let n = den.degree().unwrap_or(0);
    let mut a = DMatrix::zeros(n, n);
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        a[(i, n - 1)] = -den.coeff(i);
    }
    let b = DMatrix::from_fn(n, 2, |i, k| nums[k].coeff(i));
    let mut c = DMatrix::zeros(1, n);
    if n > 0 {
        c[(0, n - 1)] = 1.0;
    }
    Ok(StateSpace {
        a,
        b,
        c,
        d: DMatrix::from_row_slice(1, 2, &direct),
    })
}

/// Largest distance of any entry from the nearest integer.
pub fn max_integer_deviation(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max((v - v.round()).abs()))
}

pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// First step at which `|y|` exceeded the divergence limit.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// CSV with header `k,r,u,y` and 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "k,r,u,y")?;
        for k in 0..self.len() {
            writeln!(w, "{k},{:.16e},{:.16e},{:.16e}", self.r[k], self.u[k], self.y[k])?;
        }
        Ok(())
    }
}

/// Run plant and two-input controller in feedback for `r.len()` steps.
pub fn simulate_loop(
    plant: &StateSpace,
    controller: &StateSpace,
    r: &[f64],
    x0_plant: &[f64],
    x0_ctrl: &[f64],
) -> Result<Trajectory> {
    plant.validate()?;
    controller.validate()?;
    if plant.inputs() != 1 || plant.outputs() != 1 {
        return Err(Error::Dimension("plant must be single-input single-output".into()));
    }
    if controller.inputs() != 2 || controller.outputs() != 1 {
        return Err(Error::Dimension(
            "controller must have inputs [y, r] and one output".into(),
        ));
    }
    if x0_plant.len() != plant.states() || x0_ctrl.len() != controller.states() {
        return Err(Error::Dimension("initial state length mismatch".into()));
    }
    let dp = plant.d[(0, 0)];
    let dcy = controller.d[(0, 0)];
    let dcr = controller.d[(0, 1)];
    if dp != 0.0 && dcy != 0.0 {
        return Err(Error::AlgebraicLoop);
    }
    let mut xp = DVector::from_column_slice(x0_plant);
    let mut xc = DVector::from_column_slice(x0_ctrl);
    let mut out = Trajectory {
        r: Vec::with_capacity(r.len()),
        u: Vec::with_capacity(r.len()),
        y: Vec::with_capacity(r.len()),
        diverged_at: None,
    };
    for (k, &rk) in r.iter().enumerate() {
        let yp = (&plant.c * &xp)[0];
        let yc = (&controller.c * &xc)[0];
        let (u, y) = if dp == 0.0 {
            let y = yp;
            (yc + dcy * y + dcr * rk, y)
        } else {
            let u = yc + dcr * rk;
            (u, yp + dp * u)
        };
        out.r.push(rk);
        out.u.push(u);
        out.y.push(y);
        if !y.is_finite() || y.abs() > DIVERGENCE_LIMIT {
            out.diverged_at = Some(k);
            break;
        }
        xp = &plant.a * &xp + &plant.b * u;
        xc = &controller.a * &xc + &controller.b * DVector::from_column_slice(&[y, rk]);
    }
    Ok(out)
}

/// Simulate a SISO realization driven by `input`.
pub fn simulate_open(sys: &StateSpace, input: &[f64]) -> Result<Vec<f64>> {
    sys.validate()?;
    if sys.inputs() != 1 || sys.outputs() != 1 {
        return Err(Error::Dimension("system must be single-input single-output".into()));
    }
    let mut x = DVector::zeros(sys.states());
    let mut y = Vec::with_capacity(input.len());
    for &v in input {
        y.push((&sys.c * &x)[0] + sys.d[(0, 0)] * v);
        x = &sys.a * &x + &sys.b * v;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(asc: &[f64]) -> Polynomial {
        Polynomial::from_ascending(asc.to_vec())
    }

    #[test]
    fn first_order_realization() {
        let ss = realize_tf(&TransferFunction::new(p(&[1.0]), p(&[-0.5, 1.0]))).unwrap();
        assert_eq!(ss.a, DMatrix::from_element(1, 1, 0.5));
        assert_eq!(ss.b, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(ss.c, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(ss.d, DMatrix::from_element(1, 1, 0.0));
    }

    #[test]
    fn biproper_direct_term() {
        // (2z + 1)/(z - 0.5) = 2 + 2/(z - 0.5)
        let ss = realize_tf(&TransferFunction::new(p(&[1.0, 2.0]), p(&[-0.5, 1.0]))).unwrap();
        assert_eq!(ss.d[(0, 0)], 2.0);
        assert_eq!(ss.c[(0, 0)], 2.0);
        assert!(realize_tf(&TransferFunction::new(p(&[0.0, 0.0, 1.0]), p(&[1.0, 1.0]))).is_err());
    }

    #[test]
    fn companion_last_row() {
        let ss = realize_tf(&TransferFunction::new(p(&[1.0]), p(&[10.0, -4.0, -13.0, -1.0, 1.0]))).unwrap();
        let last: Vec<f64> = ss.a.row(3).iter().copied().collect();
        assert_eq!(last, vec![-10.0, 4.0, 13.0, 1.0]);
        assert_eq!(max_integer_deviation(&ss.a), 0.0);
    }

    #[test]
    fn zero_loop_stays_zero() {
        let plant = realize_tf(&TransferFunction::new(p(&[1.0]), p(&[-2.0, 1.0]))).unwrap();
        let ctrl = realize_controller(&ControllerPolys {
            den: p(&[0.0, 1.0]),
            num_y: p(&[-1.5]),
            num_r: p(&[0.5]),
        })
        .unwrap();
        let t = simulate_loop(&plant, &ctrl, &[0.0; 50], &[0.0], &[0.0]).unwrap();
        assert!(t.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn open_loop_unstable_plant_diverges() {
        let plant = realize_tf(&TransferFunction::new(p(&[1.0]), p(&[-2.0, 1.0]))).unwrap();
        let pass = realize_controller(&ControllerPolys {
            den: p(&[1.0]),
            num_y: Polynomial::zero(),
            num_r: p(&[1.0]),
        })
        .unwrap();
        let t = simulate_loop(&plant, &pass, &[2.0; 200], &[0.0], &[]).unwrap();
        assert!(t.diverged());
    }

    #[test]
    fn algebraic_loop_detected() {
        let plant = realize_tf(&TransferFunction::new(p(&[1.0, 1.0]), p(&[-2.0, 1.0]))).unwrap();
        let ctrl = realize_controller(&ControllerPolys {
            den: p(&[1.0]),
            num_y: p(&[0.5]),
            num_r: p(&[1.0]),
        })
        .unwrap();
        assert!(matches!(
            simulate_loop(&plant, &ctrl, &[1.0], &[0.0], &[]),
            Err(Error::AlgebraicLoop)
        ));
    }

    #[test]
    fn csv_format() {
        let t = Trajectory {
            r: vec![2.0],
            u: vec![-0.5],
            y: vec![0.1],
            diverged_at: None,
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "k,r,u,y\n0,2.0000000000000000e0,-5.0000000000000000e-1,1.0000000000000001e-1\n"
        );
    }
}

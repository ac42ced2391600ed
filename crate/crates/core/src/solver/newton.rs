//! Damped Newton iteration for square complex systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition estimate above which a Jacobian is treated as singular.
pub const MAX_CONDITION: f64 = 1e14;
const MAX_HALVINGS: usize = 8;

/// A square system `F(z) = 0` with an analytic Jacobian.
pub trait NewtonSystem {
    fn dim(&self) -> usize;
    fn residual(&self, z: &[Complex64]) -> Result<Vec<Complex64>>;
    fn jacobian(&self, z: &[Complex64]) -> Result<DMatrix<Complex64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub solution: Vec<Complex64>,
    pub residual_inf_norm: f64,
    pub iterations: usize,
}

pub fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `J x = b`, rejecting ill-conditioned `J`.
pub fn solve_linear(j: &DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let inverse = j
        .clone()
        .try_inverse()
        .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
    let condition = one_norm(j) * one_norm(&inverse);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::SingularJacobian { condition });
    }
    let x = j
        .clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
    Ok(x.iter().copied().collect())
}

/// Newton's method from `start`, halving the step (up to 8 times) whenever
/// the infinity norm of the residual fails to decrease.
///
/// A residual evaluation that fails with [`Error::StepTooLarge`] or
/// [`Error::Singular`] counts as a failed decrease.
pub fn newton_refine<S: NewtonSystem + ?Sized>(
    system: &S,
    start: &[Complex64],
    tol: f64,
    max_iters: usize,
) -> Result<NewtonOutcome> {
    newton_refine_accepting(system, start, tol, tol, max_iters)
}

/// Like [`newton_refine`], but an iterate that stalls (or exhausts the
/// iteration budget) with residual at most `accept_tol` is returned as a success.
pub fn newton_refine_accepting<S: NewtonSystem + ?Sized>(
    system: &S,
    start: &[Complex64],
    tol: f64,
    accept_tol: f64,
    max_iters: usize,
) -> Result<NewtonOutcome> {
    let mut z = start.to_vec();
    let mut f = system.residual(&z)?;
    let mut r = inf_norm(&f);
    for iteration in 0..max_iters {
        if r <= tol {
            return Ok(NewtonOutcome {
                solution: z,
                residual_inf_norm: r,
                iterations: iteration,
            });
        }
        let j = system.jacobian(&z)?;
        let minus_f: Vec<Complex64> = f.iter().map(|v| -v).collect();
        let step = solve_linear(&j, &minus_f)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<Complex64> = z.iter().zip(&step).map(|(a, d)| a + d * lambda).collect();
            match system.residual(&trial) {
                Ok(ft) => {
                    let rt = inf_norm(&ft);
                    if rt < r {
                        accepted = Some((trial, ft, rt));
                        break;
                    }
                }
                Err(Error::StepTooLarge) | Err(Error::Singular(_)) => {}
                Err(e) => return Err(e),
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((zt, ft, rt)) => {
                z = zt;
                f = ft;
                r = rt;
            }
            None if r <= accept_tol => {
                return Ok(NewtonOutcome {
                    solution: z,
                    residual_inf_norm: r,
                    iterations: iteration + 1,
                })
            }
            None => return Err(Error::NoProgress { residual: r }),
        }
    }
    if r <= accept_tol {
        Ok(NewtonOutcome {
            solution: z,
            residual_inf_norm: r,
            iterations: max_iters,
        })
    } else {
        Err(Error::MaxIterations {
            iterations: max_iters,
            residual: r,
        })
    }
}

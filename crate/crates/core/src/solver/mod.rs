//! Critical points of potentials: the complete structure, the deformation
//! space near it, and Dehn fillings.
//!
//! Unknowns are the logarithms of the variables. Residuals of the gradient
//! equations are the branch-free products `G_v - 1` (see
//! [`Potential::gradient_products`]); only the filling equation
//! `p·u + q·v = 2πi` with `u = 2 log ξ`, `v = 2 log η` depends on branches, and
//! those are carried along by continuation from the complete structure,
//! where `u = v = 0`.

mod newton;
mod slope;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use newton::{inf_norm, newton_refine, newton_refine_accepting, solve_linear, NewtonOutcome, NewtonSystem, MAX_CONDITION};
pub use slope::{normalize_slope, Slope};

use crate::dilog::ContinuedLog;
use crate::error::{Error, Result};
use crate::potential::{ParamPoint, Potential};

/// Filling volumes at or below this are flat (non-hyperbolic) solutions.
pub const MIN_FILLING_VOLUME: f64 = 1e-8;
/// Core geodesics shorter than this indicate a degenerate filling.
pub const MIN_GEODESIC_LENGTH: f64 = 1e-9;
/// Maximum number of consecutive step halvings on a continuation path.
pub const MAX_PATH_HALVINGS: u32 = 20;
/// Largest change of any log-coordinate accepted in one continuation step.
const MAX_JUMP: f64 = 0.35;
const TRACK_ITERS: usize = 12;
const TRACE_MAX_STEP: f64 = 0.02;
const FILL_MAX_STEP: f64 = 1.0 / 32.0;

/// Sixteen seed values; seed `k` assigns `SEED_VALUES[(k + 3j) % 16]` to
/// the `j`-th non-meridian variable.
pub const SEED_VALUES: [Complex64; 16] = [
    Complex64 { re: -0.5, im: 0.8 },
    Complex64 { re: 0.5, im: 0.8 },
    Complex64 { re: -0.5, im: -0.8 },
    Complex64 { re: 0.5, im: -0.8 },
    Complex64 { re: 1.3, im: 0.0 },
    Complex64 { re: -1.3, im: 0.0 },
    Complex64 { re: 0.3, im: 0.6 },
    Complex64 { re: -0.7, im: 0.6 },
    Complex64 { re: 0.4, im: 0.5 },
    Complex64 { re: -0.6, im: 0.5 },
    Complex64 { re: 1.5, im: 0.5 },
    Complex64 { re: -1.5, im: 0.5 },
    Complex64 { re: 0.2, im: 1.2 },
    Complex64 { re: -0.2, im: 1.2 },
    Complex64 { re: 2.0, im: 1.0 },
    Complex64 { re: 0.7, im: 0.3 },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Newton stopping tolerance (infinity norm of the residual).
    pub newton_tol: f64,
    /// Residual accepted for a solution.
    pub accept_tol: f64,
    /// Accepted `|p·u + q·v - 2πi|`.
    pub filling_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-12,
            accept_tol: 1e-10,
            filling_tol: 1e-9,
            max_newton_iters: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub point: ParamPoint,
    pub residual_inf_norm: f64,
    pub newton_iters: usize,
}

/// A point of the deformation space reached by continuation in `log ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSample {
    pub log_xi: Complex64,
    /// Continued `log η`, zero at the complete structure.
    pub log_eta: Complex64,
    pub point: ParamPoint,
    pub residual_inf_norm: f64,
}

impl DeformationSample {
    /// `u = 2 log ξ`
    pub fn u(&self) -> Complex64 {
        self.log_xi * 2.0
    }

    /// `v = 2 log η`
    pub fn v(&self) -> Complex64 {
        self.log_eta * 2.0
    }
}

/// Samples traced so far, and the obstruction that stopped the trace, if any.
#[derive(Debug, Clone)]
pub struct TraceOutcome {
    pub samples: Vec<DeformationSample>,
    pub obstruction: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillingSolution {
    pub slope: Slope,
    pub critical: CriticalPoint,
    /// `u = 2 log ξ`, continued from 0.
    pub u: ContinuedLog,
    /// `v = 2 log η`, continued from 0.
    pub v: ContinuedLog,
    pub path_steps: usize,
    /// `|p·u + q·v - 2πi|`
    pub filling_residual: f64,
}

impl FillingSolution {
    pub fn log_xi(&self) -> Complex64 {
        self.u.value * 0.5
    }
}

struct FillingTarget {
    p: f64,
    q: f64,
    target: Complex64,
    eta_offset: Complex64,
}

/// The gradient equations of a potential in log coordinates, optionally with
/// the meridian pinned and optionally augmented by the filling equation.
struct PotentialSystem<'a> {
    pot: &'a Potential,
    reference: Option<&'a ParamPoint>,
    meridian_log: Option<Complex64>,
    filling: Option<FillingTarget>,
}

impl PotentialSystem<'_> {
    fn full_coords(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut full = z.to_vec();
        if let Some(m) = self.meridian_log {
            full.push(m);
        }
        full
    }

    fn point(&self, z: &[Complex64]) -> Result<ParamPoint> {
        let full = self.full_coords(z);
        match self.reference {
            Some(r) => self.pot.continue_point(r, &full),
            None => self.pot.point_from_logs(&full),
        }
    }

    fn residual_at(&self, pt: &ParamPoint) -> Vec<Complex64> {
        let mut f = self.pot.equation_residuals(pt);
        if let Some(t) = &self.filling {
            let m = self.pot.meridian_index();
            let u = pt.logs[m].value * 2.0;
            let v = (self.pot.log_eta(pt) - t.eta_offset) * 2.0;
            f.push(u * t.p + v * t.q - t.target);
        }
        f
    }

    fn jacobian_at(&self, pt: &ParamPoint, columns: usize) -> DMatrix<Complex64> {
        let g = self.pot.gradient_products(pt);
        let h = self.pot.log_hessian(pt);
        let rows = self.pot.meridian_index() + usize::from(self.filling.is_some());
        let mut j = DMatrix::from_element(rows, columns, Complex64::new(0.0, 0.0));
        for v in 0..self.pot.meridian_index() {
            for w in 0..columns {
                j[(v, w)] = g[v] * h[v][w];
            }
        }
        if let Some(t) = &self.filling {
            let m = self.pot.meridian_index();
            let de = self.pot.log_eta_gradient(pt);
            for w in 0..columns {
                j[(rows - 1, w)] = de[w] * (2.0 * t.q);
            }
            j[(rows - 1, m)] += 2.0 * t.p;
        }
        j
    }

    /// `∂F/∂(log ξ)` at fixed non-meridian coordinates.
    fn meridian_derivative(&self, pt: &ParamPoint) -> Vec<Complex64> {
        let g = self.pot.gradient_products(pt);
        let h = self.pot.log_hessian(pt);
        let m = self.pot.meridian_index();
        (0..m).map(|v| g[v] * h[v][m]).collect()
    }
}

impl NewtonSystem for PotentialSystem<'_> {
    fn dim(&self) -> usize {
        self.pot.meridian_index() + usize::from(self.filling.is_some())
    }

    fn residual(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.residual_at(&self.point(z)?))
    }

    fn jacobian(&self, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
        let pt = self.point(z)?;
        Ok(self.jacobian_at(&pt, z.len()))
    }
}

fn seed_vectors(count: usize) -> Vec<Vec<Complex64>> {
    (0..SEED_VALUES.len())
        .map(|k| (0..count).map(|j| SEED_VALUES[(k + 3 * j) % SEED_VALUES.len()]).collect())
        .collect()
}

/// Newton from `start`, accepting a stalled iterate whose residual is within `accept_tol`.
fn refine(system: &PotentialSystem, start: &[Complex64], cfg: &SolverConfig, max_iters: usize) -> Result<NewtonOutcome> {
    newton_refine_accepting(system, start, cfg.newton_tol, cfg.accept_tol, max_iters)
}

/// Solves the gradient equations with the meridian pinned at `ξ = 1`.
///
/// Every seed is refined; among converged roots whose dilog arguments are all
/// non-real and whose volume `Σ sign·D(m)` is nonzero, the root of largest
/// volume is returned, conjugated if its volume is negative.
pub fn solve_complete(pot: &Potential, seeds: Option<&[Vec<Complex64>]>, cfg: &SolverConfig) -> Result<CriticalPoint> {
    let m = pot.meridian_index();
    let default_seeds;
    let seeds = match seeds {
        Some(s) => s,
        None => {
            default_seeds = seed_vectors(m);
            &default_seeds
        }
    };
    let system = PotentialSystem {
        pot,
        reference: None,
        meridian_log: Some(Complex64::new(0.0, 0.0)),
        filling: None,
    };
    let mut best_residual = f64::INFINITY;
    let mut best: Option<(f64, CriticalPoint)> = None;
    let mut converged_any = false;
    for seed in seeds {
        if seed.len() != m {
            return Err(Error::Domain(format!("seed has {} values, expected {m}", seed.len())));
        }
        let start: Vec<Complex64> = match seed.iter().map(|v| crate::dilog::principal_log(*v)).collect() {
            Ok(s) => s,
            Err(_) => continue,
        };
        let out = match refine(&system, &start, cfg, cfg.max_newton_iters) {
            Ok(out) => out,
            Err(Error::NoProgress { residual }) | Err(Error::MaxIterations { residual, .. }) => {
                best_residual = best_residual.min(residual);
                continue;
            }
            Err(_) => continue,
        };
        best_residual = best_residual.min(out.residual_inf_norm);
        let mut values: Vec<Complex64> = out.solution.iter().map(|l| l.exp()).collect();
        values.push(Complex64::new(1.0, 0.0));
        let Ok(mut point) = pot.make_point(&values) else { continue };
        converged_any = true;
        let args = pot.dilog_arguments(&point);
        if args.iter().any(|(_, z)| z.im.abs() < 1e-9) {
            continue;
        }
        let Ok(mut volume) = pot.dilog_volume(&point) else { continue };
        if volume.abs() < MIN_FILLING_VOLUME {
            continue;
        }
        if volume < 0.0 {
            let conj: Vec<Complex64> = values.iter().map(|v| v.conj()).collect();
            let Ok(p) = pot.make_point(&conj) else { continue };
            point = p;
            volume = -volume;
        }
        let residual = inf_norm(&pot.equation_residuals(&point));
        if residual > cfg.accept_tol {
            continue;
        }
        let candidate = CriticalPoint {
            point,
            residual_inf_norm: residual,
            newton_iters: out.iterations,
        };
        if best.as_ref().map_or(true, |(v, _)| volume > *v + 1e-9) {
            best = Some((volume, candidate));
        }
    }
    match best {
        Some((_, cp)) => Ok(cp),
        None if converged_any => Err(Error::NoGeometricRoot),
        None => Err(Error::NoConvergence { best_residual }),
    }
}

/// Branch of `log η` at the complete structure: the nearest multiple of `iπ`.
pub fn eta_branch_offset(pot: &Potential, complete: &ParamPoint) -> Complex64 {
    let raw = pot.log_eta(complete);
    Complex64::new(0.0, (raw.im / PI).round() * PI)
}

fn max_jump(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Moves the meridian log from `pt`'s value to `target`, returning the new point.
fn advance_meridian(
    pot: &Potential,
    start: &ParamPoint,
    target: Complex64,
    cfg: &SolverConfig,
) -> Result<(ParamPoint, f64)> {
    let m = pot.meridian_index();
    let from = start.logs[m].value;
    let distance = (target - from).norm();
    if distance == 0.0 {
        let r = inf_norm(&pot.equation_residuals(start));
        return Ok((start.clone(), r));
    }
    let base = (TRACE_MAX_STEP / distance).min(1.0);
    let min_step = base / f64::from(1u32 << MAX_PATH_HALVINGS);
    let mut step = base;
    let mut lambda = 0.0;
    let mut current = start.clone();
    let mut residual = 0.0;
    while lambda < 1.0 {
        let next = (lambda + step).min(1.0);
        let meridian = from + (target - from) * next;
        let z0: Vec<Complex64> = current.log_coords()[..m].to_vec();
        let attempt = (|| -> Result<(ParamPoint, f64)> {
            let here = PotentialSystem {
                pot,
                reference: Some(&current),
                meridian_log: Some(current.logs[m].value),
                filling: None,
            };
            // tangent predictor: J dz = -∂F/∂(log ξ) dξ
            let j = here.jacobian_at(&current, m);
            let dm = meridian - current.logs[m].value;
            let rhs: Vec<Complex64> = here.meridian_derivative(&current).iter().map(|d| -d * dm).collect();
            let dz = solve_linear(&j, &rhs)?;
            let predicted: Vec<Complex64> = z0.iter().zip(&dz).map(|(a, b)| a + b).collect();
            let system = PotentialSystem {
                pot,
                reference: Some(&current),
                meridian_log: Some(meridian),
                filling: None,
            };
            let out = refine(&system, &predicted, cfg, TRACK_ITERS)?;
            if max_jump(&out.solution, &z0) > MAX_JUMP {
                return Err(Error::StepTooLarge);
            }
            let pt = system.point(&out.solution)?;
            Ok((pt, out.residual_inf_norm))
        })();
        match attempt {
            Ok((pt, r)) => {
                current = pt;
                residual = r;
                lambda = next;
                step = (step * 2.0).min(base);
            }
            Err(e) => {
                step *= 0.5;
                if step < min_step {
                    return Err(Error::PathObstruction(format!(
                        "deformation path blocked near log xi = {} ({e})",
                        from + (target - from) * lambda
                    )));
                }
            }
        }
    }
    Ok((current, residual))
}

/// Traces the deformation space along `log ξ ∈ [0, u_end]`.
///
/// With `samples ≥ 2`, samples are taken at `log ξ = u_end·k/(samples-1)`; a
/// single sample is taken at `u_end`. The outcome keeps the samples reached
/// before an obstruction.
pub fn trace_deformation(
    pot: &Potential,
    complete: &CriticalPoint,
    u_end: Complex64,
    samples: usize,
    cfg: &SolverConfig,
) -> Result<TraceOutcome> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let offset = eta_branch_offset(pot, &complete.point);
    let targets: Vec<Complex64> = if samples == 1 {
        vec![u_end]
    } else {
        (0..samples).map(|k| u_end * (k as f64 / (samples - 1) as f64)).collect()
    };
    let mut out = Vec::with_capacity(samples);
    let mut current = complete.point.clone();
    for target in targets {
        match advance_meridian(pot, &current, target, cfg) {
            Ok((pt, residual)) => {
                let m = pot.meridian_index();
                out.push(DeformationSample {
                    log_xi: pt.logs[m].value,
                    log_eta: pot.log_eta(&pt) - offset,
                    residual_inf_norm: residual.max(inf_norm(&pot.equation_residuals(&pt))),
                    point: pt.clone(),
                });
                current = pt;
            }
            Err(e) => {
                return Ok(TraceOutcome {
                    samples: out,
                    obstruction: Some(e),
                })
            }
        }
    }
    Ok(TraceOutcome {
        samples: out,
        obstruction: None,
    })
}

/// Solves the filling equations for `slope`, starting from the complete structure.
pub fn solve_filling(pot: &Potential, slope: Slope, cfg: &SolverConfig) -> Result<FillingSolution> {
    let complete = solve_complete(pot, None, cfg)?;
    solve_filling_from(pot, &complete, slope, cfg)
}

/// Homotopy in `t ∈ [0, 1]` for `p·u + q·v = 2πi·t` from the complete structure.
pub fn solve_filling_from(
    pot: &Potential,
    complete: &CriticalPoint,
    slope: Slope,
    cfg: &SolverConfig,
) -> Result<FillingSolution> {
    let offset = eta_branch_offset(pot, &complete.point);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let (p, q) = (slope.p() as f64, slope.q() as f64);
    let base = FILL_MAX_STEP;
    let min_step = base / f64::from(1u32 << MAX_PATH_HALVINGS);
    let mut step = base;
    let mut t = 0.0;
    let mut current = complete.point.clone();
    let mut steps = 0usize;
    let mut residual = 0.0;
    let mut iterations = 0;
    while t < 1.0 {
        let next = (t + step).min(1.0);
        let z0 = current.log_coords();
        let attempt = (|| -> Result<(ParamPoint, NewtonOutcome)> {
            let make = |target: f64| PotentialSystem {
                pot,
                reference: Some(&current),
                meridian_log: None,
                filling: Some(FillingTarget {
                    p,
                    q,
                    target: two_pi_i * target,
                    eta_offset: offset,
                }),
            };
            // tangent predictor: J dz = (0, …, 2πi·Δt)
            let here = make(t);
            let j = here.jacobian_at(&current, z0.len());
            let mut rhs = vec![Complex64::new(0.0, 0.0); z0.len()];
            *rhs.last_mut().unwrap() = two_pi_i * (next - t);
            let dz = solve_linear(&j, &rhs)?;
            let predicted: Vec<Complex64> = z0.iter().zip(&dz).map(|(a, b)| a + b).collect();
            let system = make(next);
            let out = refine(&system, &predicted, cfg, TRACK_ITERS)?;
            if max_jump(&out.solution, &z0) > MAX_JUMP {
                return Err(Error::StepTooLarge);
            }
            let pt = system.point(&out.solution)?;
            Ok((pt, out))
        })();
        match attempt {
            Ok((pt, out)) => {
                current = pt;
                residual = out.residual_inf_norm;
                iterations += out.iterations;
                t = next;
                steps += 1;
                step = (step * 2.0).min(base);
            }
            Err(e) => {
                step *= 0.5;
                if step < min_step {
                    return Err(Error::PathObstruction(format!(
                        "filling {slope} blocked at t = {t:.6} ({e}); possibly exceptional slope"
                    )));
                }
            }
        }
    }
    let m = pot.meridian_index();
    let u = current.logs[m].value * 2.0;
    let v = (pot.log_eta(&current) - offset) * 2.0;
    let filling_residual = (u * p + v * q - two_pi_i).norm();
    let eq_residual = inf_norm(&pot.equation_residuals(&current));
    if eq_residual > cfg.accept_tol || filling_residual > cfg.filling_tol {
        return Err(Error::NoConvergence {
            best_residual: eq_residual.max(filling_residual).max(residual),
        });
    }
    let volume = pot.dilog_volume(&current).unwrap_or(0.0);
    let length = 2.0 * (current.logs[m].value.re / q).abs();
    if volume <= MIN_FILLING_VOLUME || length < MIN_GEODESIC_LENGTH {
        return Err(Error::PathObstruction(format!(
            "filling {slope} degenerates (volume {volume:.3e}, core length {length:.3e}); possibly exceptional slope"
        )));
    }
    Ok(FillingSolution {
        slope,
        critical: CriticalPoint {
            point: current,
            residual_inf_norm: eq_residual,
            newton_iters: iterations,
        },
        u: ContinuedLog::from_value(u),
        v: ContinuedLog::from_value(v),
        path_steps: steps,
        filling_residual,
    })
}

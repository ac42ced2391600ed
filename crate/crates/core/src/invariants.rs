//! Geometric invariants read off from critical points.
//!
//! The Chern–Simons value is `-Re V_α / (2π²)` reduced to `[0, 1/2)`. It is
//! defined only up to one additive constant that does not depend on the
//! slope, so only differences between fillings of the same knot carry meaning.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::potential::{ParamPoint, Potential, Shapes};
use crate::solver::{CriticalPoint, FillingSolution, Slope, MIN_GEODESIC_LENGTH};

/// Modulus of well-definedness of the reported Chern–Simons value.
pub const CS_AMBIGUITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantReport {
    pub volume: f64,
    pub volume_from_shapes: f64,
    /// Representative in `[0, 1/2)`.
    pub cs_value: f64,
    /// `-Re V_α / (2π²)` before reduction.
    pub cs_raw: f64,
    pub cs_ambiguity: f64,
    pub geodesic_length: f64,
    /// Representative in `[0, 2π/q)`.
    pub geodesic_torsion: f64,
    /// Sign of `Re λ` before taking its absolute value.
    pub length_sign: f64,
    pub v_alpha: Complex64,
}

/// Complex length `λ` of the core geodesic and its reported parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoreGeodesic {
    pub complex_length: Complex64,
    pub length: f64,
    pub torsion: f64,
    pub length_sign: f64,
    /// Set when `|Re λ|` is below [`MIN_GEODESIC_LENGTH`].
    pub degenerate: bool,
}

/// `x mod m` in `[0, m)`.
pub fn reduce_mod(x: f64, m: f64) -> f64 {
    let r = x.rem_euclid(m);
    if r >= m {
        0.0
    } else {
        r
    }
}

/// `V + [log ξ (2πi - p log ξ) + sπ²] / q`, with the continued `log ξ` of `pt`.
pub fn eval_v_alpha(pot: &Potential, slope: &Slope, pt: &ParamPoint) -> Complex64 {
    let l = pt.logs[pot.meridian_index()].value;
    let (p, q, s) = (slope.p() as f64, slope.q() as f64, slope.s() as f64);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    pot.eval_v(pt) + (l * (two_pi_i - l * p) + s * PI * PI) / q
}

/// Logarithmic gradient of `V_α`: the gradient of `V` with
/// `(2πi - 2p log ξ)/q` added to the meridian component.
pub fn alpha_log_gradient(pot: &Potential, slope: &Slope, pt: &ParamPoint) -> Vec<Complex64> {
    let m = pot.meridian_index();
    let mut g = pot.log_gradient(pt);
    let l = pt.logs[m].value;
    g[m] += (Complex64::new(0.0, 2.0 * PI) - l * (2.0 * slope.p() as f64)) / slope.q() as f64;
    g
}

/// `Im V_α` at the solution.
pub fn volume_of(pot: &Potential, sol: &FillingSolution) -> f64 {
    eval_v_alpha(pot, &sol.slope, &sol.critical.point).im
}

/// `D(c2) + D(d4) + D(a5) + D(b5) + D(d5)`.
pub fn volume_from_shapes(sh: &Shapes) -> Result<f64> {
    sh.volume()
}

pub fn chern_simons_raw(pot: &Potential, slope: &Slope, pt: &ParamPoint) -> f64 {
    -eval_v_alpha(pot, slope, pt).re / (2.0 * PI * PI)
}

/// `(representative in [0, 1/2), 1/2)`.
pub fn chern_simons_of(pot: &Potential, sol: &FillingSolution) -> (f64, f64) {
    let raw = chern_simons_raw(pot, &sol.slope, &sol.critical.point);
    (reduce_mod(raw, CS_AMBIGUITY), CS_AMBIGUITY)
}

/// `λ = 2(sπi - log ξ)/q`, reported as `length = |Re λ|` and torsion `Im λ mod 2π/q`.
pub fn core_geodesic_of(slope: &Slope, sol: &FillingSolution) -> CoreGeodesic {
    core_geodesic_at(slope, sol.log_xi())
}

pub fn core_geodesic_at(slope: &Slope, log_xi: Complex64) -> CoreGeodesic {
    let q = slope.q() as f64;
    let lambda = (Complex64::new(0.0, slope.s() as f64 * PI) - log_xi) * (2.0 / q);
    let length = lambda.re.abs();
    CoreGeodesic {
        complex_length: lambda,
        length,
        torsion: reduce_mod(lambda.im, 2.0 * PI / q),
        length_sign: if lambda.re < 0.0 { -1.0 } else { 1.0 },
        degenerate: length < MIN_GEODESIC_LENGTH,
    }
}

/// `-R(1/yξ) + R(y/ξ) - R(y/x) + R(ξ/x) + R(x/ξ) - π²/6` for 5_2, or in
/// general `Σ sign·R(m) + constant`, with principal Rogers values.
pub fn rogers_combo(pot: &Potential, pt: &ParamPoint) -> Result<Complex64> {
    pot.rogers_combo(pt)
}

/// `R - [V + log ξ · log η]`, with `log η` measured from its value at the
/// complete structure. Locally constant on the deformation space.
pub fn rogers_defect(pot: &Potential, pt: &ParamPoint, log_eta: Complex64) -> Result<Complex64> {
    let l = pt.logs[pot.meridian_index()].value;
    Ok(pot.rogers_combo(pt)? - (pot.eval_v(pt) + l * log_eta))
}

pub fn report(pot: &Potential, sol: &FillingSolution) -> Result<InvariantReport> {
    let pt = &sol.critical.point;
    let v_alpha = eval_v_alpha(pot, &sol.slope, pt);
    let cs_raw = -v_alpha.re / (2.0 * PI * PI);
    let geo = core_geodesic_of(&sol.slope, sol);
    Ok(InvariantReport {
        volume: v_alpha.im,
        volume_from_shapes: pot.dilog_volume(pt)?,
        cs_value: reduce_mod(cs_raw, CS_AMBIGUITY),
        cs_raw,
        cs_ambiguity: CS_AMBIGUITY,
        geodesic_length: geo.length,
        geodesic_torsion: geo.torsion,
        length_sign: geo.length_sign,
        v_alpha,
    })
}

/// Invariants of the complete (unfilled) structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompleteReport {
    pub v: Complex64,
    pub volume: f64,
    pub volume_from_shapes: f64,
    pub eta: Complex64,
    pub eta_alternate: Option<Complex64>,
    pub cs_value: f64,
}

pub fn complete_report(pot: &Potential, cp: &CriticalPoint) -> Result<CompleteReport> {
    let v = pot.eval_v(&cp.point);
    let (eta, eta_alternate) = pot.eval_eta(&cp.point)?;
    Ok(CompleteReport {
        v,
        volume: v.im,
        volume_from_shapes: pot.dilog_volume(&cp.point)?,
        eta,
        eta_alternate,
        cs_value: reduce_mod(-v.re / (2.0 * PI * PI), CS_AMBIGUITY),
    })
}

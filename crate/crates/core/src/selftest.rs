//! Built-in identity checks run by `knotpot selftest`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dilog::{bloch_wigner_d, li2, principal_log};
use crate::error::Result;
use crate::potential::{builtin_five_two, ParamPoint, Potential};
use crate::solver::{solve_complete, SolverConfig};

pub const IDENTITY_TOL: f64 = 1e-10;
pub const DERIVATIVE_TOL: f64 = 1e-6;
pub const VOLUME_TOL: f64 = 1e-8;
pub const IDENTITY_SAMPLES: usize = 500;
pub const DERIVATIVE_SAMPLES: usize = 100;

pub const CATALAN: f64 = 0.915_965_594_177_219_015;
pub const D_SIXTH_ROOT: f64 = 1.014_941_606_409_653_625;
pub const FIVE_TWO_VOLUME: f64 = 2.828_122_088_330_783;

/// Replaceable pieces, so the checks can be run against a deliberately broken
/// implementation.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub bloch_wigner: fn(Complex64) -> Result<f64>,
}

impl Default for Hooks {
    fn default() -> Self {
        Hooks {
            bloch_wigner: bloch_wigner_d,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupResult {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub max_error: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub passed: bool,
    pub groups: Vec<GroupResult>,
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    checks: usize,
    max_error: f64,
    failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            checks: 0,
            max_error: 0.0,
            failure: None,
        }
    }

    fn record(&mut self, what: &str, err: f64) {
        self.checks += 1;
        let err = if err.is_nan() { f64::INFINITY } else { err };
        if err > self.max_error {
            self.max_error = err;
        }
        if err > self.tolerance && self.failure.is_none() {
            self.failure = Some(format!("{what}: error {err:e}"));
        }
    }

    fn fail(&mut self, what: String) {
        self.checks += 1;
        self.max_error = f64::INFINITY;
        if self.failure.is_none() {
            self.failure = Some(what);
        }
    }

    fn finish(self) -> GroupResult {
        GroupResult {
            name: self.name,
            passed: self.failure.is_none(),
            checks: self.checks,
            max_error: self.max_error,
            tolerance: self.tolerance,
            failure: self.failure,
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A point away from the real axis with modulus in `[1/20, 20]`.
fn random_off_axis(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let r = (rng.gen_range(-3.0..3.0f64)).exp();
        let t = rng.gen_range(-PI..PI);
        if t.sin().abs() > 0.02 {
            return Complex64::from_polar(r, t);
        }
    }
}

fn dilog_identities(hooks: &Hooks) -> GroupResult {
    let d = hooks.bloch_wigner;
    let one = c(1.0, 0.0);
    let mut t = Tally::new("dilog-identities", IDENTITY_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);

    let known = [
        ("D(i) = Catalan", c(0.0, 1.0), CATALAN),
        ("D(exp(iπ/3))", Complex64::from_polar(1.0, PI / 3.0), D_SIXTH_ROOT),
    ];
    for (what, z, expected) in known {
        match d(z) {
            Ok(v) => t.record(what, (v - expected).abs()),
            Err(e) => t.fail(format!("{what}: {e}")),
        }
    }

    for _ in 0..IDENTITY_SAMPLES {
        let z = random_off_axis(&mut rng);
        let (Ok(lz), Ok(lnz), Ok(l1z)) = (principal_log(z), principal_log(-z), principal_log(one - z)) else {
            t.fail(format!("log undefined at {z}"));
            continue;
        };
        let inv = li2(z) + li2(one / z) + PI * PI / 6.0 + lnz * lnz * 0.5;
        t.record("inversion", inv.norm());
        let refl = li2(z) + li2(one - z) - PI * PI / 6.0 + lz * l1z;
        t.record("reflection", refl.norm());
    }

    for _ in 0..IDENTITY_SAMPLES {
        let x = random_off_axis(&mut rng);
        let y = random_off_axis(&mut rng);
        let xy = one - x * y;
        let args = [x, y, (one - x) / xy, xy, (one - y) / xy];
        match args.iter().map(|&a| d(a)).collect::<Result<Vec<f64>>>() {
            Ok(vals) => t.record("five-term", vals.iter().sum::<f64>().abs()),
            Err(e) => t.fail(format!("five-term: {e}")),
        }
    }

    for _ in 0..IDENTITY_SAMPLES {
        let z = random_off_axis(&mut rng);
        let images = [
            (one - one / z, 1.0),
            (one / (one - z), 1.0),
            (one / z, -1.0),
            (one - z, -1.0),
            (z.conj(), -1.0),
        ];
        let base = match d(z) {
            Ok(v) => v,
            Err(e) => {
                t.fail(format!("D({z}): {e}"));
                continue;
            }
        };
        for (w, sign) in images {
            match d(w) {
                Ok(v) => t.record("D symmetry", (v - sign * base).abs()),
                Err(e) => t.fail(format!("D({w}): {e}")),
            }
        }
    }
    t.finish()
}

/// A regular point of `pot`: dilog arguments keep clear of `0`, `1` and the cut.
pub fn random_regular_point(pot: &Potential, rng: &mut impl Rng) -> ParamPoint {
    loop {
        let logs: Vec<Complex64> = (0..pot.dim())
            .map(|_| c(rng.gen_range(-0.7..0.7), rng.gen_range(-2.5..2.5)))
            .collect();
        let Ok(pt) = pot.point_from_logs(&logs) else { continue };
        let clear = pot.dilog_arguments(&pt).iter().all(|(_, m)| {
            m.norm() > 0.1 && (c(1.0, 0.0) - m).norm() > 0.1 && (m.im.abs() > 0.05 || m.re < 0.9)
        });
        if clear {
            return pt;
        }
    }
}

fn shifted(pot: &Potential, pt: &ParamPoint, k: usize, h: Complex64) -> Option<ParamPoint> {
    let mut logs = pt.log_coords();
    logs[k] += h;
    pot.point_from_logs(&logs).ok()
}

fn derivatives(pot: &Potential) -> GroupResult {
    let mut t = Tally::new("derivatives", DERIVATIVE_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let h = 1e-5;
    let n = pot.dim();
    for _ in 0..DERIVATIVE_SAMPLES {
        let pt = random_regular_point(pot, &mut rng);
        let grad = pot.log_gradient(&pt);
        let hess = pot.log_hessian(&pt);
        for k in 0..n {
            let (Some(plus), Some(minus)) = (shifted(pot, &pt, k, c(h, 0.0)), shifted(pot, &pt, k, c(-h, 0.0))) else {
                t.fail(format!("finite-difference point unavailable near {:?}", pt.values));
                continue;
            };
            let fd = (pot.eval_v(&plus) - pot.eval_v(&minus)) / (2.0 * h);
            t.record("log_gradient", (fd - grad[k]).norm() / grad[k].norm().max(1.0));
            let gp = pot.log_gradient(&plus);
            let gm = pot.log_gradient(&minus);
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                t.record("log_hessian", (fd - hess[j][k]).norm() / hess[j][k].norm().max(1.0));
            }
        }
    }
    t.finish()
}

fn complete_structure(hooks: &Hooks) -> GroupResult {
    let mut t = Tally::new("complete-structure", VOLUME_TOL);
    let pot = match Potential::new(builtin_five_two()) {
        Ok(p) => p,
        Err(e) => {
            t.fail(format!("built-in potential: {e}"));
            return t.finish();
        }
    };
    let cp = match solve_complete(&pot, None, &SolverConfig::default()) {
        Ok(cp) => cp,
        Err(e) => {
            t.fail(format!("solve_complete: {e}"));
            return t.finish();
        }
    };
    let x = cp.point.values[0];
    let y = cp.point.values[1];
    t.record("x^3 - x - 1", (x * x * x - x - 1.0).norm());
    t.record("y = x + 1", (y - x - 1.0).norm());
    t.record("Im V", (pot.eval_v(&cp.point).im - FIVE_TWO_VOLUME).abs());
    let mut sum_d = 0.0;
    for (sign, m) in pot.dilog_arguments(&cp.point) {
        match (hooks.bloch_wigner)(m) {
            Ok(v) => sum_d += sign * v,
            Err(e) => t.fail(format!("D({m}): {e}")),
        }
    }
    t.record("Σ D", (sum_d - FIVE_TWO_VOLUME).abs());
    match pot.eval_eta(&cp.point) {
        Ok((eta, _)) => t.record("η = 1", (eta - 1.0).norm()),
        Err(e) => t.fail(format!("η: {e}")),
    }
    t.finish()
}

pub fn run_with(hooks: &Hooks) -> SelftestReport {
    let mut groups = vec![dilog_identities(hooks)];
    match Potential::new(builtin_five_two()) {
        Ok(pot) => groups.push(derivatives(&pot)),
        Err(e) => {
            let mut t = Tally::new("derivatives", DERIVATIVE_TOL);
            t.fail(format!("built-in potential: {e}"));
            groups.push(t.finish());
        }
    }
    groups.push(complete_structure(hooks));
    SelftestReport {
        passed: groups.iter().all(|g| g.passed),
        groups,
    }
}

pub fn run() -> SelftestReport {
    run_with(&Hooks::default())
}

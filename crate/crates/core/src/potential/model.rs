//! Evaluation of a validated potential at points of parameter space.
//!
//! All derivatives are logarithmic: the gradient component for a variable `v`
//! is `v ∂V/∂v`, and Newton steps are taken in the coordinates `log v`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::spec::{LongitudeExpr, Monomial, PotentialSpec, Rational};
use crate::dilog::{bloch_wigner_d, continue_log, li2, ContinuedLog};
use crate::error::{Error, Result};

/// Distance to a singularity below which a point is rejected.
pub const SINGULAR_EPS: f64 = 1e-13;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * PI };

#[derive(Debug, Clone)]
struct CompiledQuad {
    coeff: f64,
    exact: Rational,
    a: usize,
    b: usize,
}

#[derive(Debug, Clone)]
struct CompiledLongitude {
    prefactor: Vec<i64>,
    /// `(exponent, tracked factor index)`
    factors: Vec<(i64, usize)>,
}

/// A validated [`PotentialSpec`] compiled to dense exponent vectors.
#[derive(Debug, Clone)]
pub struct Potential {
    spec: PotentialSpec,
    meridian: usize,
    /// Distinct monomials whose `log(1 - m)` is tracked: dilog arguments and longitude factors.
    factors: Vec<Vec<i64>>,
    factor_monomials: Vec<Monomial>,
    /// `(sign, factor index)`
    dilogs: Vec<(f64, usize)>,
    quads: Vec<CompiledQuad>,
    constant: f64,
    longitude: CompiledLongitude,
    alternate: Option<CompiledLongitude>,
}

/// A point `(x, y, ξ, ...)` with continued logarithms of every variable and of
/// every tracked `1 - m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint {
    pub values: Vec<Complex64>,
    pub logs: Vec<ContinuedLog>,
    pub one_minus_logs: Vec<ContinuedLog>,
}

impl ParamPoint {
    pub fn log_coords(&self) -> Vec<Complex64> {
        self.logs.iter().map(|l| l.value).collect()
    }

    pub fn conj(&self) -> ParamPoint {
        let conj_log = |l: &ContinuedLog| ContinuedLog {
            value: l.value.conj(),
            winding: -l.winding,
        };
        ParamPoint {
            values: self.values.iter().map(|v| v.conj()).collect(),
            logs: self.logs.iter().map(conj_log).collect(),
            one_minus_logs: self.one_minus_logs.iter().map(conj_log).collect(),
        }
    }
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        spec.validate()?;
        let index: BTreeMap<&str, usize> = spec
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let n = spec.variables.len();
        let dense = |m: &Monomial| -> Vec<i64> {
            let mut e = vec![0; n];
            for (v, &k) in &m.0 {
                e[index[v.as_str()]] += k;
            }
            e
        };
        let mut factors: Vec<Vec<i64>> = Vec::new();
        let mut factor_monomials = Vec::new();
        let mut track = |m: &Monomial| -> usize {
            let d = dense(m);
            if let Some(i) = factors.iter().position(|f| *f == d) {
                i
            } else {
                factors.push(d);
                factor_monomials.push(m.canonical());
                factors.len() - 1
            }
        };
        let dilogs = spec
            .dilog_terms
            .iter()
            .map(|t| (t.sign as f64, track(&t.arg)))
            .collect();
        let mut compile_lon = |e: &LongitudeExpr| CompiledLongitude {
            prefactor: dense(&e.prefactor),
            factors: e.factors.iter().map(|f| (f.exp, track(&f.arg))).collect(),
        };
        let longitude = compile_lon(&spec.longitude.primary());
        let alternate = spec.longitude.alternate.as_ref().map(&mut compile_lon);
        let quads = spec
            .quad_terms
            .iter()
            .map(|q| CompiledQuad {
                coeff: q.coeff.to_f64(),
                exact: q.coeff,
                a: index[q.vars[0].as_str()],
                b: index[q.vars[1].as_str()],
            })
            .collect();
        Ok(Potential {
            meridian: n - 1,
            constant: spec.constant_pi2.to_f64() * PI * PI,
            spec,
            factors,
            factor_monomials,
            dilogs,
            quads,
            longitude,
            alternate,
        })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.variables.len()
    }

    pub fn meridian_index(&self) -> usize {
        self.meridian
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.spec.variables.iter().position(|v| v == name)
    }

    pub fn tracked_monomials(&self) -> &[Monomial] {
        &self.factor_monomials
    }

    /// Index of a tracked monomial in [`ParamPoint::one_minus_logs`].
    pub fn tracked_index(&self, m: &Monomial) -> Option<usize> {
        let c = m.canonical();
        self.factor_monomials.iter().position(|f| *f == c)
    }

    /// Arguments of the dilogarithm terms with their signs.
    pub fn dilog_arguments(&self, pt: &ParamPoint) -> Vec<(f64, Complex64)> {
        self.dilogs
            .iter()
            .map(|&(s, f)| (s, monomial_value(&self.factors[f], &pt.values)))
            .collect()
    }

    /// All logarithms start on the principal branch.
    pub fn make_point(&self, values: &[Complex64]) -> Result<ParamPoint> {
        if values.len() != self.dim() {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                values.len()
            )));
        }
        self.check_values(values)?;
        let logs = values
            .iter()
            .map(|&v| ContinuedLog::principal(v))
            .collect::<Result<Vec<_>>>()?;
        let one_minus_logs = self
            .factors
            .iter()
            .map(|f| ContinuedLog::principal(ONE - monomial_value(f, values)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamPoint {
            values: values.to_vec(),
            logs,
            one_minus_logs,
        })
    }

    pub fn make_point_named(&self, values: &BTreeMap<String, Complex64>) -> Result<ParamPoint> {
        let mut ordered = Vec::with_capacity(self.dim());
        for v in &self.spec.variables {
            ordered.push(*values.get(v).ok_or_else(|| {
                Error::Domain(format!("no value given for variable `{v}`"))
            })?);
        }
        for k in values.keys() {
            if self.variable_index(k).is_none() {
                return Err(Error::Domain(format!("unknown variable `{k}`")));
            }
        }
        self.make_point(&ordered)
    }

    /// Point with `log v = log_coords[v]` and principal `log(1 - m)`.
    pub fn point_from_logs(&self, log_coords: &[Complex64]) -> Result<ParamPoint> {
        let values: Vec<Complex64> = log_coords.iter().map(|l| l.exp()).collect();
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular("coordinate overflow".into()));
        }
        let mut pt = self.make_point(&values)?;
        pt.logs = log_coords.iter().map(|&l| ContinuedLog::from_value(l)).collect();
        Ok(pt)
    }

    /// Builds the point with `log v = log_coords[v]` exactly, continuing each
    /// tracked `log(1 - m)` from `reference`.
    pub fn continue_point(&self, reference: &ParamPoint, log_coords: &[Complex64]) -> Result<ParamPoint> {
        let values: Vec<Complex64> = log_coords.iter().map(|l| l.exp()).collect();
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular("coordinate overflow".into()));
        }
        self.check_values(&values)?;
        let logs = log_coords.iter().map(|&l| ContinuedLog::from_value(l)).collect();
        let one_minus_logs = self
            .factors
            .iter()
            .zip(&reference.one_minus_logs)
            .map(|(f, prev)| continue_log(prev, ONE - monomial_value(f, &values)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamPoint {
            values,
            logs,
            one_minus_logs,
        })
    }

    fn check_values(&self, values: &[Complex64]) -> Result<()> {
        for (v, name) in values.iter().zip(&self.spec.variables) {
            if v.norm() < SINGULAR_EPS {
                return Err(Error::Singular(format!("variable `{name}` vanishes")));
            }
        }
        for (f, m) in self.factors.iter().zip(&self.factor_monomials) {
            if (ONE - monomial_value(f, values)).norm() < SINGULAR_EPS {
                return Err(Error::Singular(format!("argument {m} equals 1")));
            }
        }
        Ok(())
    }

    fn log_monomial(&self, f: usize, pt: &ParamPoint) -> Complex64 {
        self.factors[f]
            .iter()
            .zip(&pt.logs)
            .map(|(&a, l)| l.value * a as f64)
            .sum()
    }

    fn quadratic_part(&self, pt: &ParamPoint) -> Complex64 {
        self.quads
            .iter()
            .map(|q| pt.logs[q.a].value * pt.logs[q.b].value * q.coeff)
            .sum()
    }

    /// `V` at `pt`.
    ///
    /// Principal `Li2` is corrected by `-2πi·k·log m` where `k` is the winding of
    /// the continued `log(1 - m)`, so that `V` stays analytic along a continuation
    /// path; at zero windings this is the principal-branch formula.
    pub fn eval_v(&self, pt: &ParamPoint) -> Complex64 {
        let mut total = Complex64::new(self.constant, 0.0) + self.quadratic_part(pt);
        for &(sign, f) in &self.dilogs {
            let m = monomial_value(&self.factors[f], &pt.values);
            let mut term = li2(m);
            let k = pt.one_minus_logs[f].winding;
            if k != 0 {
                term -= TWO_PI_I * k as f64 * self.log_monomial(f, pt);
            }
            total += term * sign;
        }
        total
    }

    /// `(v ∂V/∂v)_v` using the continued logarithms stored in `pt`.
    pub fn log_gradient(&self, pt: &ParamPoint) -> Vec<Complex64> {
        let n = self.dim();
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        for &(sign, f) in &self.dilogs {
            let l = pt.one_minus_logs[f].value;
            for (v, &a) in self.factors[f].iter().enumerate() {
                if a != 0 {
                    g[v] -= l * (sign * a as f64);
                }
            }
        }
        for q in &self.quads {
            g[q.a] += pt.logs[q.b].value * q.coeff;
            g[q.b] += pt.logs[q.a].value * q.coeff;
        }
        g
    }

    /// `w ∂/∂w` of each gradient component; symmetric by construction.
    pub fn log_hessian(&self, pt: &ParamPoint) -> Vec<Vec<Complex64>> {
        let n = self.dim();
        let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for &(sign, f) in &self.dilogs {
            let m = monomial_value(&self.factors[f], &pt.values);
            let ratio = m / (ONE - m) * sign;
            let e = &self.factors[f];
            for u in 0..n {
                for v in u..n {
                    if e[u] != 0 && e[v] != 0 {
                        h[u][v] += ratio * (e[u] * e[v]) as f64;
                    }
                }
            }
        }
        for q in &self.quads {
            let (u, v) = if q.a <= q.b { (q.a, q.b) } else { (q.b, q.a) };
            let c = if u == v { 2.0 * q.coeff } else { q.coeff };
            h[u][v] += c;
        }
        for u in 0..n {
            for v in 0..u {
                h[u][v] = h[v][u];
            }
        }
        h
    }

    /// `exp` of each gradient component, computed without logarithms:
    /// `Π (1 - m)^(-sign·a_v) · Π w^(coeff)`. Zero exactly on the critical set
    /// modulo `2πi`, so `G_v - 1` is a branch-free residual.
    pub fn gradient_products(&self, pt: &ParamPoint) -> Vec<Complex64> {
        let n = self.dim();
        let mut out = vec![ONE; n];
        for (v, slot) in out.iter_mut().enumerate() {
            let mut prod = ONE;
            for &(sign, f) in &self.dilogs {
                let a = self.factors[f][v];
                if a != 0 {
                    let base = ONE - monomial_value(&self.factors[f], &pt.values);
                    prod *= base.powi((-(sign as i64) * a) as i32);
                }
            }
            for q in &self.quads {
                for (here, other) in [(q.a, q.b), (q.b, q.a)] {
                    if here == v {
                        prod *= if q.exact.is_integer() {
                            pt.values[other].powi(q.exact.numerator() as i32)
                        } else {
                            (pt.logs[other].value * q.coeff).exp()
                        };
                    }
                }
            }
            *slot = prod;
        }
        out
    }

    /// Residuals `G_v - 1` of the non-meridian gradient equations.
    pub fn equation_residuals(&self, pt: &ParamPoint) -> Vec<Complex64> {
        self.gradient_products(pt)
            .into_iter()
            .take(self.meridian)
            .map(|g| g - ONE)
            .collect()
    }

    fn eval_longitude(&self, lon: &CompiledLongitude, pt: &ParamPoint) -> Result<Complex64> {
        let mut value = monomial_value(&lon.prefactor, &pt.values);
        for &(e, f) in &lon.factors {
            let base = ONE - monomial_value(&self.factors[f], &pt.values);
            if e < 0 && base.norm() < SINGULAR_EPS {
                return Err(Error::Singular(format!(
                    "longitude factor 1 - {} vanishes",
                    self.factor_monomials[f]
                )));
            }
            value *= base.powi(e as i32);
        }
        Ok(value)
    }

    /// Longitude eigenvalue from the primary and (if present) the alternate expression.
    pub fn eval_eta(&self, pt: &ParamPoint) -> Result<(Complex64, Option<Complex64>)> {
        let primary = self.eval_longitude(&self.longitude, pt)?;
        let alternate = match &self.alternate {
            Some(a) => Some(self.eval_longitude(a, pt)?),
            None => None,
        };
        Ok((primary, alternate))
    }

    /// Continued `log η` of the primary expression, assembled from the
    /// continued logarithms in `pt`.
    pub fn log_eta(&self, pt: &ParamPoint) -> Complex64 {
        let lon = &self.longitude;
        let mut l: Complex64 = lon
            .prefactor
            .iter()
            .zip(&pt.logs)
            .map(|(&a, lg)| lg.value * a as f64)
            .sum();
        for &(e, f) in &lon.factors {
            l += pt.one_minus_logs[f].value * e as f64;
        }
        l
    }

    /// `∂ log η / ∂ log w` for every variable `w`.
    pub fn log_eta_gradient(&self, pt: &ParamPoint) -> Vec<Complex64> {
        let lon = &self.longitude;
        let mut g: Vec<Complex64> = lon
            .prefactor
            .iter()
            .map(|&a| Complex64::new(a as f64, 0.0))
            .collect();
        for &(e, f) in &lon.factors {
            let m = monomial_value(&self.factors[f], &pt.values);
            let ratio = m / (ONE - m);
            for (w, &a) in self.factors[f].iter().enumerate() {
                g[w] -= ratio * (e * a) as f64;
            }
        }
        g
    }

    /// `Σ sign·D(m)`: the total volume of the tetrahedra behind the dilog terms.
    pub fn dilog_volume(&self, pt: &ParamPoint) -> Result<f64> {
        let mut vol = 0.0;
        for (sign, m) in self.dilog_arguments(pt) {
            vol += sign * bloch_wigner_d(m)?;
        }
        Ok(vol)
    }

    /// `Σ sign·R(m) + constant` with principal Rogers dilogarithms.
    pub fn rogers_combo(&self, pt: &ParamPoint) -> Result<Complex64> {
        let mut total = Complex64::new(self.constant, 0.0);
        for (sign, m) in self.dilog_arguments(pt) {
            total += crate::dilog::rogers_r(m)? * sign;
        }
        Ok(total)
    }

    /// The same combination evaluated with the continued logarithms of `pt`
    /// (and the continued `Li2` used by [`Potential::eval_v`]).
    pub fn rogers_combo_continued(&self, pt: &ParamPoint) -> Complex64 {
        let mut total = Complex64::new(self.constant, 0.0);
        for &(sign, f) in &self.dilogs {
            let m = monomial_value(&self.factors[f], &pt.values);
            let log_m = self.log_monomial(f, pt);
            let lm = pt.one_minus_logs[f];
            let li = li2(m) - TWO_PI_I * lm.winding as f64 * log_m;
            total += (li + log_m * lm.value * 0.5) * sign;
        }
        total
    }
}

pub(crate) fn monomial_value(exponents: &[i64], values: &[Complex64]) -> Complex64 {
    let mut p = ONE;
    for (&a, &v) in exponents.iter().zip(values) {
        match a {
            0 => {}
            1 => p *= v,
            -1 => p /= v,
            _ => p *= v.powi(a as i32),
        }
    }
    p
}

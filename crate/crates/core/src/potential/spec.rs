//! Serializable description of a potential function.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational `num/den`, serialized as `[num, den]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational(pub i64, pub i64);

impl Rational {
    pub fn integer(n: i64) -> Self {
        Rational(n, 1)
    }

    pub fn numerator(&self) -> i64 {
        self.0
    }

    pub fn denominator(&self) -> i64 {
        self.1
    }

    pub fn to_f64(&self) -> f64 {
        self.0 as f64 / self.1 as f64
    }

    pub fn is_integer(&self) -> bool {
        self.1 == 1
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.1 <= 0 {
            return Err(Error::Validation(format!(
                "{what}: denominator must be positive, got {}",
                self.1
            )));
        }
        if gcd(self.0, self.1) != 1 {
            return Err(Error::Validation(format!(
                "{what}: rational {}/{} is not in lowest terms",
                self.0, self.1
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 == 1 {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{}/{}", self.0, self.1)
        }
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Product of variables raised to integer powers, e.g. `{x: -1, xi: 1}` for `ξ/x`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(pub BTreeMap<String, i64>);

impl Monomial {
    pub fn new<'a>(exponents: impl IntoIterator<Item = (&'a str, i64)>) -> Self {
        Monomial(
            exponents
                .into_iter()
                .map(|(v, e)| (v.to_string(), e))
                .collect(),
        )
    }

    pub fn exponent(&self, var: &str) -> i64 {
        self.0.get(var).copied().unwrap_or(0)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Same monomial with zero exponents dropped.
    pub fn canonical(&self) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter(|(_, &e)| e != 0)
                .map(|(v, &e)| (v.clone(), e))
                .collect(),
        )
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .filter(|(_, &e)| e != 0)
            .map(|(v, &e)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
            .collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("*"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilogTerm {
    pub sign: i64,
    pub arg: Monomial,
}

/// `coeff · log(vars[0]) · log(vars[1])`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadLogTerm {
    pub coeff: Rational,
    pub vars: [String; 2],
}

/// One factor `(1 - arg)^exp` of a longitude expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongitudeFactor {
    pub exp: i64,
    pub arg: Monomial,
}

/// `prefactor · Π (1 - arg)^exp`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongitudeExpr {
    pub prefactor: Monomial,
    pub factors: Vec<LongitudeFactor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongitudeSpec {
    pub prefactor: Monomial,
    pub factors: Vec<LongitudeFactor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate: Option<LongitudeExpr>,
}

impl LongitudeSpec {
    pub fn primary(&self) -> LongitudeExpr {
        LongitudeExpr {
            prefactor: self.prefactor.clone(),
            factors: self.factors.clone(),
        }
    }
}

/// Symbolic potential
/// `V = Σ sign·Li2(arg) + Σ coeff·log a·log b + constant_pi2·π²`
/// together with its longitude eigenvalue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub name: String,
    /// Ordered variables; the meridian variable comes last.
    pub variables: Vec<String>,
    pub dilog_terms: Vec<DilogTerm>,
    pub quad_terms: Vec<QuadLogTerm>,
    pub constant_pi2: Rational,
    pub longitude: LongitudeSpec,
    pub meridian: String,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Validation("no variables declared".into()));
        }
        let declared: BTreeSet<&str> = self.variables.iter().map(String::as_str).collect();
        if declared.len() != self.variables.len() {
            return Err(Error::Validation("variables are not distinct".into()));
        }
        if self.variables.last() != Some(&self.meridian) {
            return Err(Error::Validation(format!(
                "meridian `{}` must be the last declared variable",
                self.meridian
            )));
        }
        let check_monomial = |m: &Monomial, what: &str| -> Result<()> {
            for v in m.variables() {
                if !declared.contains(v) {
                    return Err(Error::Validation(format!(
                        "{what} references undeclared variable `{v}`"
                    )));
                }
            }
            Ok(())
        };
        if self.dilog_terms.is_empty() {
            return Err(Error::Validation("no dilogarithm terms".into()));
        }
        for (i, t) in self.dilog_terms.iter().enumerate() {
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::Validation(format!(
                    "dilog_terms[{i}]: sign must be -1 or 1, got {}",
                    t.sign
                )));
            }
            check_monomial(&t.arg, &format!("dilog_terms[{i}]"))?;
            if t.arg.canonical().0.is_empty() {
                return Err(Error::Validation(format!(
                    "dilog_terms[{i}]: constant argument"
                )));
            }
        }
        let mut meridian_in_quad = false;
        for (i, t) in self.quad_terms.iter().enumerate() {
            t.coeff.validate(&format!("quad_terms[{i}].coeff"))?;
            for v in &t.vars {
                if !declared.contains(v.as_str()) {
                    return Err(Error::Validation(format!(
                        "quad_terms[{i}] references undeclared variable `{v}`"
                    )));
                }
                meridian_in_quad |= *v == self.meridian;
            }
        }
        if !meridian_in_quad {
            return Err(Error::Validation(format!(
                "meridian `{}` does not appear in any quadratic term",
                self.meridian
            )));
        }
        self.constant_pi2.validate("constant_pi2")?;
        let mut exprs = vec![self.longitude.primary()];
        exprs.extend(self.longitude.alternate.clone());
        for (k, e) in exprs.iter().enumerate() {
            let what = if k == 0 { "longitude" } else { "longitude.alternate" };
            check_monomial(&e.prefactor, &format!("{what}.prefactor"))?;
            for (i, f) in e.factors.iter().enumerate() {
                check_monomial(&f.arg, &format!("{what}.factors[{i}]"))?;
            }
        }
        Ok(())
    }

    /// Pretty JSON document in the spec-file schema.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("spec serializes");
        s.push('\n');
        s
    }
}

/// Parses and validates a spec document. Unknown fields are rejected.
pub fn load_spec(text: &[u8]) -> Result<PotentialSpec> {
    let mut de = serde_json::Deserializer::from_slice(text);
    let spec: PotentialSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            line: inner.line(),
            column: inner.column(),
            path,
            message: inner.to_string(),
        }
    })?;
    de.end().map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        path: ".".into(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

/// The potential of the 5_2 knot complement in variables `(x, y, ξ)`.
pub fn builtin_five_two() -> PotentialSpec {
    let m = |pairs: &[(&str, i64)]| Monomial::new(pairs.iter().copied());
    let quad = |n: i64, a: &str, b: &str| QuadLogTerm {
        coeff: Rational::integer(n),
        vars: [a.to_string(), b.to_string()],
    };
    let dilog = |sign: i64, arg: Monomial| DilogTerm { sign, arg };
    let factor = |exp: i64, arg: Monomial| LongitudeFactor { exp, arg };
    let prefactor = m(&[("x", -1), ("y", 1), ("xi", 6)]);
    PotentialSpec {
        name: "5_2".into(),
        variables: vec!["x".into(), "y".into(), "xi".into()],
        dilog_terms: vec![
            dilog(-1, m(&[("y", -1), ("xi", -1)])),
            dilog(1, m(&[("y", 1), ("xi", -1)])),
            dilog(-1, m(&[("x", -1), ("y", 1)])),
            dilog(1, m(&[("x", -1), ("xi", 1)])),
            dilog(1, m(&[("x", 1), ("xi", -1)])),
        ],
        quad_terms: vec![quad(2, "xi", "x"), quad(-2, "xi", "y"), quad(-6, "xi", "xi")],
        constant_pi2: Rational(-1, 6),
        longitude: LongitudeSpec {
            prefactor: prefactor.clone(),
            factors: vec![factor(1, m(&[("y", -1), ("xi", -1)]))],
            alternate: Some(LongitudeExpr {
                prefactor,
                factors: vec![
                    factor(1, m(&[("x", -1), ("xi", 1)])),
                    factor(-1, m(&[("x", 1), ("xi", -1)])),
                    factor(-1, m(&[("y", 1), ("xi", -1)])),
                ],
            }),
        },
        meridian: "xi".into(),
    }
}

/// Looks up a built-in spec by registry key (`5_2`).
pub fn builtin(name: &str) -> Option<PotentialSpec> {
    match name {
        "5_2" => Some(builtin_five_two()),
        _ => None,
    }
}

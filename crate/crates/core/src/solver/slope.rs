use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Rational;

/// A surgery slope `p/q` in lowest terms with `q ≥ 1`, completed by a
/// cocycle `(r, s)` with `ps - qr = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Slope {
    p: i64,
    q: i64,
    r: i64,
    s: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// Inverse of `a` modulo `m > 1`, for `gcd(a, m) = 1`.
fn mod_inverse(a: i64, m: i64) -> i64 {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quotient = old_r / r;
        (old_r, r) = (r, old_r - quotient * r);
        (old_s, s) = (s, old_s - quotient * s);
    }
    old_s.rem_euclid(m)
}

/// Reduces `p_raw/q_raw` to lowest terms with positive denominator and picks
/// the canonical cocycle: `0 ≤ s < q` with `s ≡ p⁻¹ (mod q)`, or `(r, s) = (-1, 0)`
/// when `q = 1`.
pub fn normalize_slope(p_raw: i64, q_raw: i64) -> Result<Slope> {
    if q_raw == 0 {
        return Err(Error::ZeroDenominator { p: p_raw, q: q_raw });
    }
    let g = gcd(p_raw, q_raw);
    let sign = q_raw.signum();
    let (p, q) = (sign * p_raw / g, sign * q_raw / g);
    let (r, s) = if q == 1 {
        (-1, 0)
    } else {
        let s = mod_inverse(p, q);
        ((p * s - 1) / q, s)
    };
    Ok(Slope { p, q, r, s })
}

impl Slope {
    /// A slope with an explicit cocycle; only `ps - qr = 1`, `q ≥ 1` and
    /// lowest terms are required.
    pub fn with_cocycle(p: i64, q: i64, r: i64, s: i64) -> Result<Slope> {
        if q < 1 || gcd(p, q) != 1 || p * s - q * r != 1 {
            return Err(Error::Domain(format!(
                "({p}, {q}, {r}, {s}) is not a normalized slope with ps - qr = 1"
            )));
        }
        Ok(Slope { p, q, r, s })
    }

    /// The cocycle `(r + kp, s + kq)`, which describes the same filling.
    pub fn shifted(&self, k: i64) -> Slope {
        Slope {
            p: self.p,
            q: self.q,
            r: self.r + k * self.p,
            s: self.s + k * self.q,
        }
    }

    pub fn p(&self) -> i64 {
        self.p
    }
    pub fn q(&self) -> i64 {
        self.q
    }
    pub fn r(&self) -> i64 {
        self.r
    }
    pub fn s(&self) -> i64 {
        self.s
    }

    pub fn as_rational(&self) -> Rational {
        Rational(self.p, self.q)
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// Parses `p/q` (optional signs) or an integer `p` meaning `p/1`.
impl FromStr for Slope {
    type Err = Error;

    fn from_str(text: &str) -> Result<Slope> {
        let bad = || Error::Domain(format!("cannot parse slope `{text}`; expected p/q or p"));
        let t = text.trim();
        let (p, q) = match t.split_once('/') {
            Some((p, q)) => (
                p.trim().parse::<i64>().map_err(|_| bad())?,
                q.trim().parse::<i64>().map_err(|_| bad())?,
            ),
            None => (t.parse::<i64>().map_err(|_| bad())?, 1),
        };
        normalize_slope(p, q)
    }
}

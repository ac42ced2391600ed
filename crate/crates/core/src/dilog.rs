//! Complex logarithms and dilogarithms.
//!
//! Conventions used throughout the crate:
//!
//! * `principal_log` has imaginary part in `(-π, π]`; a negative-zero imaginary
//!   part is treated as `+0`, so the negative real axis maps to `+iπ`.
//! * `li2` is the principal Euler dilogarithm with its cut on `[1, ∞)`. On the
//!   cut itself the value is the limit from below, `Im Li2(x) = -π ln x`.
//! * `bloch_wigner_d` is single valued and returns exactly `0` on the real line.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const PI2_6: f64 = PI * PI / 6.0;
const TWO_PI: f64 = 2.0 * PI;

/// `B_{2k} / (2k+1)!` for `k = 1..=12`.
const BERNOULLI_COEFFS: [f64; 12] = [
    0.027777777777777776,
    -0.0002777777777777778,
    4.72411186696901e-06,
    -9.185773074661964e-08,
    1.8978869988971e-09,
    -4.0647616451442256e-11,
    8.921691020456452e-13,
    -1.9939295860721074e-14,
    4.518980029619918e-16,
    -1.0356517612181247e-17,
    2.395218621026187e-19,
    -5.581785874325009e-21,
];

#[inline]
fn canonical_zero(z: Complex64) -> Complex64 {
    // -0.0 + 0.0 == +0.0
    Complex64::new(z.re, z.im + 0.0)
}

/// A branch of `log w`, remembered together with its index relative to the
/// principal branch: `value = principal_log(w) + 2πi·winding`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuedLog {
    pub value: Complex64,
    pub winding: i64,
}

impl ContinuedLog {
    /// The principal branch of `log w`.
    pub fn principal(w: Complex64) -> Result<Self> {
        Ok(Self {
            value: principal_log(w)?,
            winding: 0,
        })
    }

    /// Wraps an explicit logarithm value, recovering its winding from `exp(value)`.
    pub fn from_value(value: Complex64) -> Self {
        let w = value.exp();
        let principal = canonical_zero(w).ln();
        let winding = ((value.im - principal.im) / TWO_PI).round() as i64;
        Self { value, winding }
    }

    pub fn argument(&self) -> Complex64 {
        self.value.exp()
    }
}

pub fn principal_log(w: Complex64) -> Result<Complex64> {
    if w.re == 0.0 && w.im == 0.0 {
        return Err(Error::Domain("log of zero".into()));
    }
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(Error::Domain(format!("log of non-finite value {w}")));
    }
    Ok(canonical_zero(w).ln())
}

/// Continues `prev` to the branch of `log w` nearest to it.
///
/// Fails with [`Error::StepTooLarge`] when that branch is at least π/2 away in
/// imaginary part, which means the caller moved `w` too far in one step.
pub fn continue_log(prev: &ContinuedLog, w: Complex64) -> Result<ContinuedLog> {
    let principal = principal_log(w)?;
    let shift = ((prev.value.im - principal.im) / TWO_PI).round();
    let value = principal + Complex64::new(0.0, TWO_PI * shift);
    if (value.im - prev.value.im).abs() >= PI / 2.0 {
        return Err(Error::StepTooLarge);
    }
    Ok(ContinuedLog {
        value,
        winding: shift as i64,
    })
}

/// Bernoulli-accelerated series, valid for `|z| <= 1` and `Re z <= 1/2`.
fn li2_series(z: Complex64) -> Complex64 {
    let u = -(Complex64::new(1.0, 0.0) - z).ln();
    let u2 = u * u;
    let mut sum = u - u2 * 0.25;
    let mut power = u;
    for &c in BERNOULLI_COEFFS.iter() {
        power *= u2;
        let term = power * c;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Principal branch of the Euler dilogarithm `Li2(z) = -∫₀^z log(1-w)/w dw`.
pub fn li2(z: Complex64) -> Complex64 {
    let z = canonical_zero(z);
    if z.re == 0.0 && z.im == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.re == 1.0 && z.im == 0.0 {
        return Complex64::new(PI2_6, 0.0);
    }
    let one = Complex64::new(1.0, 0.0);
    if z.norm_sqr() > 1.0 {
        // Li2(z) = -π²/6 - log²(-z)/2 - Li2(1/z); on the cut use the value from below.
        let log_neg = if z.im == 0.0 && z.re > 0.0 {
            Complex64::new(z.re.ln(), PI)
        } else {
            canonical_zero(-z).ln()
        };
        return -li2_unit_disc(one / z) - log_neg * log_neg * 0.5 - PI2_6;
    }
    li2_unit_disc(z)
}

fn li2_unit_disc(z: Complex64) -> Complex64 {
    if z.re > 0.5 {
        let one = Complex64::new(1.0, 0.0);
        let w = one - z;
        if w.re == 0.0 && w.im == 0.0 {
            return Complex64::new(PI2_6, 0.0);
        }
        // Li2(z) = π²/6 - log z log(1-z) - Li2(1-z)
        -li2_series(w) - z.ln() * w.ln() + PI2_6
    } else {
        li2_series(z)
    }
}

/// Rogers dilogarithm `R(z) = Li2(z) + log z · log(1-z) / 2` with principal logs.
pub fn rogers_r(z: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    if z == Complex64::new(0.0, 0.0) || z == one {
        return Err(Error::Domain(format!("Rogers dilogarithm is singular at {z}")));
    }
    Ok(li2(z) + principal_log(z)? * principal_log(one - z)? * 0.5)
}

/// Bloch–Wigner function `D(z) = Im Li2(z) + log|z| · arg(1-z)`: the volume of
/// the ideal tetrahedron with modulus `z`.
pub fn bloch_wigner_d(z: Complex64) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    if z == Complex64::new(0.0, 0.0) || z == one {
        return Err(Error::Domain(format!("Bloch-Wigner function is singular at {z}")));
    }
    if z.im == 0.0 {
        return Ok(0.0);
    }
    let w = canonical_zero(one - z);
    Ok(li2(z).im + z.norm().ln() * w.arg())
}

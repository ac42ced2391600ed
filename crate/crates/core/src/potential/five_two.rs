//! Tetrahedron moduli and gluing equations of the 5_2 triangulation, in terms
//! of the coordinates `(x, y, ξ)` of [`builtin_five_two`](super::builtin_five_two).

use num_complex::Complex64;
use serde::Serialize;

use super::model::{ParamPoint, SINGULAR_EPS};
use crate::dilog::bloch_wigner_d;
use crate::error::{Error, Result};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Moduli of the five ideal tetrahedra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Shapes {
    pub c2: Complex64,
    pub d4: Complex64,
    pub a5: Complex64,
    pub b5: Complex64,
    pub d5: Complex64,
}

impl Shapes {
    pub fn as_array(&self) -> [Complex64; 5] {
        [self.c2, self.d4, self.a5, self.b5, self.d5]
    }

    pub fn names() -> [&'static str; 5] {
        ["c2", "d4", "a5", "b5", "d5"]
    }

    pub fn conj(&self) -> Shapes {
        Shapes {
            c2: self.c2.conj(),
            d4: self.d4.conj(),
            a5: self.a5.conj(),
            b5: self.b5.conj(),
            d5: self.d5.conj(),
        }
    }

    fn check_nondegenerate(&self) -> Result<()> {
        for (z, name) in self.as_array().iter().zip(Self::names()) {
            if z.norm() < SINGULAR_EPS || (ONE - z).norm() < SINGULAR_EPS {
                return Err(Error::Singular(format!("degenerate modulus {name} = {z}")));
            }
        }
        Ok(())
    }

    /// Total volume `Σ D(z)` of the five tetrahedra.
    pub fn volume(&self) -> Result<f64> {
        self.check_nondegenerate()?;
        self.as_array().iter().map(|&z| bloch_wigner_d(z)).sum()
    }
}

fn xyxi(pt: &ParamPoint) -> (Complex64, Complex64, Complex64) {
    (pt.values[0], pt.values[1], pt.values[2])
}

/// `c2 = yξ, d4 = x/ξ, a5 = x/y, b5 = ξ/x, d5 = y/ξ`.
pub fn shapes_from_point(pt: &ParamPoint) -> Shapes {
    let (x, y, xi) = xyxi(pt);
    Shapes {
        c2: y * xi,
        d4: x / xi,
        a5: x / y,
        b5: xi / x,
        d5: y / xi,
    }
}

/// `LHS_i - ξ²` for the two reduced hyperbolicity equations
/// `(1-y/x)(1-x/ξ)/(1-ξ/x) = ξ²` and `(1-y/x)/((1-y/ξ)(1-1/(yξ))) = ξ²`.
pub fn reduced_residual(pt: &ParamPoint) -> Result<(Complex64, Complex64)> {
    let (x, y, xi) = xyxi(pt);
    let d1 = ONE - xi / x;
    if d1.norm() < SINGULAR_EPS {
        return Err(Error::Singular("factor 1 - xi/x vanishes".into()));
    }
    let d2a = ONE - y / xi;
    if d2a.norm() < SINGULAR_EPS {
        return Err(Error::Singular("factor 1 - y/xi vanishes".into()));
    }
    let d2b = ONE - ONE / (y * xi);
    if d2b.norm() < SINGULAR_EPS {
        return Err(Error::Singular("factor 1 - 1/(y*xi) vanishes".into()));
    }
    let xi2 = xi * xi;
    let r1 = (ONE - y / x) * (ONE - x / xi) / d1 - xi2;
    let r2 = (ONE - y / x) / (d2a * d2b) - xi2;
    Ok((r1, r2))
}

/// Edge-equation products minus one, one entry per edge of the triangulation:
/// `d4·b5`, `a5·b5·d5`, and the three longer products, in display order.
pub fn edge_residuals(sh: &Shapes) -> Result<[Complex64; 5]> {
    sh.check_nondegenerate()?;
    let Shapes { c2, d4, a5, b5, d5 } = *sh;
    let inv = |z: Complex64| ONE - ONE / z;
    let om = |z: Complex64| ONE - z;
    let e1 = d4 * b5;
    let e2 = a5 * b5 * d5;
    let e3 = c2 * a5 * inv(d4) / om(d4) * (inv(d5) * inv(c2) * inv(b5) / (om(a5) * om(b5)));
    let e4 = c2 * inv(a5) / (om(d5) * om(c2)) * (inv(d5) * inv(b5) / (om(d5) * om(a5) * om(d4)));
    let e5 = d4 * inv(a5) * inv(d4) / om(b5) * (d5 * inv(c2) / om(c2));
    Ok([e1 - ONE, e2 - ONE, e3 - ONE, e4 - ONE, e5 - ONE])
}

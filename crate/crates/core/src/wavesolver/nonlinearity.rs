//! Radial quadratic terms. The u-equation carries the null form
//! `∂t u ∂t v − ∂r u ∂r v`, which is evaluated by default as
//! `(∂t + ∂r)u ∂t v − ∂r u (∂t + ∂r)v` so every term has a good derivative.

use serde::{Deserialize, Serialize};

use crate::fieldgrid::{derivative, DerivativeDirection, Jet, Parity, SpaceTimeField};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullFormPath {
    Raw,
    #[default]
    GoodDerivative,
}

#[inline]
pub fn q_u_raw(ut: f64, ur: f64, vt: f64, vr: f64) -> f64 {
    ut * vt - ur * vr
}

#[inline]
pub fn q_u_null(ut: f64, ur: f64, vt: f64, vr: f64) -> f64 {
    (ut + ur) * vt - ur * (vt + vr)
}

#[inline]
pub fn q_v(ut: f64, vt: f64) -> f64 {
    ut * vt
}

#[inline]
pub fn source(which: Equation, path: NullFormPath, ut: f64, ur: f64, vt: f64, vr: f64) -> f64 {
    match (which, path) {
        (Equation::U, NullFormPath::Raw) => q_u_raw(ut, ur, vt, vr),
        (Equation::U, NullFormPath::GoodDerivative) => q_u_null(ut, ur, vt, vr),
        (Equation::V, _) => q_v(ut, vt),
    }
}

fn dt(j: &Jet) -> Result<SpaceTimeField> {
    match j.levels().get(1) {
        Some(l) => Ok(l.clone()),
        None => derivative(j.value(), DerivativeDirection::Dt),
    }
}

/// Right-hand side of `□u = ·` or `□v = ·` on the jets' window, with time
/// derivatives from the jets and radial ones from the grid stencils.
pub fn nonlinearity(u: &Jet, v: &Jet, which: Equation, path: NullFormPath) -> Result<SpaceTimeField> {
    u.value().check_same_window(v.value())?;
    let (ut, vt) = (dt(u)?, dt(v)?);
    let ur = derivative(u.value(), DerivativeDirection::Dr)?;
    let vr = derivative(v.value(), DerivativeDirection::Dr)?;
    let mut out = ut.map(Parity::Even, |_| 0.0);
    let (a, b, c, d) = (ut.values(), ur.values(), vt.values(), vr.values());
    for ((n, j), o) in out.values_mut().indexed_iter_mut() {
        *o = source(which, path, a[(n, j)], b[(n, j)], c[(n, j)], d[(n, j)]);
    }
    Ok(out)
}

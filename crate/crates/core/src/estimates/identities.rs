//! The two multiplier identities in conjugate form. With `W = r u`,
//! `dx = 4π r² dr` and `Box u·(∂t ± ∂r ± 1/r)u·r² = (W_tt − W_rr)(W_t ± W_r)`,
//! so both sides reduce to integrals over `[0, T] × [0, ∞)` in `(t, r)`.
//! Derivatives use fourth-order stencils (odd ghosts at r = 0) so the
//! residual is dominated by the time quadrature.

use ndarray::Array1;

use super::registry::{family_grid, Family};
use super::report::IdentityReport;
use crate::fieldgrid::stencil::{d_axis4, LeftEdge};
use crate::fieldgrid::{Parity, SpaceTimeField};
use crate::norms::quadrature::pl_integral;
use crate::norms::Slots;
use crate::regions::{is_dyadic, sigma_u, sigma_u_prime};
use crate::{Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

struct Parts {
    wr: SpaceTimeField,
    boxw: SpaceTimeField,
    /// `W_t + W_r` or `W_t − W_r`.
    flux: SpaceTimeField,
    n_t: usize,
}

fn parts(w: &SpaceTimeField, sign: f64, horizon: f64) -> Result<Parts> {
    if w.parity() != Parity::Odd || !w.is_full() {
        return Err(Error::Parameter("identities need the full odd conjugate field W = r u".into()));
    }
    if !(horizon >= 0.0 && horizon <= w.grid().t_max + 1e-12) {
        return Err(Error::Parameter(format!("T = {horizon} outside [0, {}]", w.grid().t_max)));
    }
    let n_t = w.grid().n_exact(horizon)?;
    let (dt, dr) = (w.grid().dt, w.grid().dr);
    let origin = LeftEdge::Origin(Parity::Odd);
    let d = |h: f64, axis: usize, k: usize| -> Result<SpaceTimeField> {
        Ok(w.like(d_axis4(w.values(), h, axis, k, origin)?, Parity::Unset))
    };
    let (wt, wr) = (d(dt, 0, 1)?, d(dr, 1, 1)?);
    let boxw = d(dt, 0, 2)?.zip_with(&d(dr, 1, 2)?, Parity::Odd, |a, b| a - b)?;
    let flux = wt.zip_with(&wr, Parity::Unset, |a, b| a + sign * b)?;
    Ok(Parts { wr, boxw, flux, n_t })
}

/// `∫ g(r) dr` over the whole row, trapezoidal.
fn row_integral(g: &Array1<f64>, dr: f64) -> f64 {
    pl_integral(g.view(), 0.0, dr, 0.0, (g.len() - 1) as f64 * dr)
}

/// `∫₀^T ∫ f(t, r, j, n) dr dt`.
fn space_time_integral(w: &SpaceTimeField, n_t: usize, f: impl Fn(usize, usize, f64, f64) -> f64) -> f64 {
    let (dr, dt) = (w.grid().dr, w.grid().dt);
    let mut g = Array1::zeros(w.nr());
    let inner: Array1<f64> = (0..=n_t)
        .map(|n| {
            let t = w.t(n);
            for j in 0..w.nr() {
                g[j] = f(n, j, t, w.r(j));
            }
            row_integral(&g, dr)
        })
        .collect();
    pl_integral(inner.view(), 0.0, dt, 0.0, n_t as f64 * dt)
}

fn slice_integral(w: &SpaceTimeField, f: impl Fn(usize, f64) -> f64) -> f64 {
    let g: Array1<f64> = (0..w.nr()).map(|j| f(j, w.r(j))).collect();
    row_integral(&g, w.grid().dr)
}

/// `∫∫ (1+r)^p e^{−σ_U(t−r)} Box u·(∂t+∂r+1/r)u dx dt` against its
/// right-hand side: the time-boundary term, the `r = 0` line, the p-flux,
/// the ghost term and two angular terms (zero on radial data).
pub fn check_identity_plus(w: &SpaceTimeField, p: f64, u: u64, horizon: f64) -> Result<IdentityReport> {
    check_identity_plus_named(w, p, u, horizon, "input")
}

pub fn check_identity_plus_named(
    w: &SpaceTimeField,
    p: f64,
    u: u64,
    horizon: f64,
    family_id: &str,
) -> Result<IdentityReport> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::Parameter(format!("p = {p} outside (0, 2)")));
    }
    if !is_dyadic(u) {
        return Err(Error::Parameter(format!("U = {u} is not a power of two")));
    }
    let uf = u as f64;
    let Parts { wr, boxw, flux: y, n_t } = parts(w, 1.0, horizon)?;
    let weight = |t: f64, r: f64| (1.0 + r).powf(p) * (-sigma_u(t - r, uf)).exp();

    let lhs = FOUR_PI * space_time_integral(w, n_t, |n, j, t, r| weight(t, r) * boxw.get(n, j) * y.get(n, j));
    let energy = |n: usize| {
        let t = w.t(n);
        slice_integral(w, |j, r| weight(t, r) * y.get(n, j).powi(2))
    };
    let boundary = 0.5 * FOUR_PI * (energy(n_t) - energy(0));
    let line: Array1<f64> = (0..=n_t).map(|n| (-sigma_u(w.t(n), uf)).exp() * wr.get(n, 0).powi(2)).collect();
    let origin = 0.5 * FOUR_PI * pl_integral(line.view(), 0.0, w.grid().dt, 0.0, horizon);
    let p_flux = 0.5
        * p
        * FOUR_PI
        * space_time_integral(w, n_t, |n, j, t, r| {
            (1.0 + r).powf(p - 1.0) * (-sigma_u(t - r, uf)).exp() * y.get(n, j).powi(2)
        });
    let ghost = FOUR_PI
        * space_time_integral(w, n_t, |n, j, t, r| sigma_u_prime(t - r, uf) * weight(t, r) * y.get(n, j).powi(2));

    let mut terms = Slots::default();
    terms.push("boundary_t", boundary);
    terms.push("origin_line", origin);
    terms.push("p_flux", p_flux);
    terms.push("ghost", ghost);
    terms.push("angular_1", 0.0);
    terms.push("angular_2", 0.0);
    Ok(IdentityReport::new(
        "plus",
        family_id,
        lhs,
        terms,
        *w.grid(),
        &["origin_line", "p_flux", "ghost", "angular_1", "angular_2"],
    ))
}

/// `∫∫ (1+r)^{−δ} Box u·(∂t−∂r−1/r)u dx dt` against the time-boundary
/// term, the negative `r = 0` line, the δ-flux and the (zero) angular term.
pub fn check_identity_minus(w: &SpaceTimeField, delta: f64, horizon: f64) -> Result<IdentityReport> {
    check_identity_minus_named(w, delta, horizon, "input")
}

pub fn check_identity_minus_named(
    w: &SpaceTimeField,
    delta: f64,
    horizon: f64,
    family_id: &str,
) -> Result<IdentityReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta = {delta} must be positive")));
    }
    let Parts { wr, boxw, flux: x, n_t } = parts(w, -1.0, horizon)?;
    let weight = |r: f64| (1.0 + r).powf(-delta);

    let lhs = FOUR_PI * space_time_integral(w, n_t, |n, j, _, r| weight(r) * boxw.get(n, j) * x.get(n, j));
    let energy = |n: usize| slice_integral(w, |j, r| weight(r) * x.get(n, j).powi(2));
    let boundary = 0.5 * FOUR_PI * (energy(n_t) - energy(0));
    let line: Array1<f64> = (0..=n_t).map(|n| wr.get(n, 0).powi(2)).collect();
    let origin = -0.5 * FOUR_PI * pl_integral(line.view(), 0.0, w.grid().dt, 0.0, horizon);
    let delta_flux = 0.5
        * delta
        * FOUR_PI
        * space_time_integral(w, n_t, |n, j, _, r| (1.0 + r).powf(-1.0 - delta) * x.get(n, j).powi(2));

    let mut terms = Slots::default();
    terms.push("boundary_t", boundary);
    terms.push("origin_line", origin);
    terms.push("delta_flux", delta_flux);
    terms.push("angular", 0.0);
    Ok(IdentityReport::new("minus", family_id, lhs, terms, *w.grid(), &["delta_flux"]))
}

/// Which identity a refinement run checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IdentityKind {
    Plus { p: f64, u: u64 },
    Minus { delta: f64 },
}

/// The identity on a registry family at `dr` and `dr/2`; returns the finer
/// report carrying the observed order.
pub fn check_identity_refined(kind: IdentityKind, family: Family, dr: f64, horizon: f64) -> Result<IdentityReport> {
    let run = |dr: f64| -> Result<IdentityReport> {
        let grid = family_grid(dr, horizon)?;
        let w = family.field(&grid)?;
        let id = family.to_string();
        match kind {
            IdentityKind::Plus { p, u } => check_identity_plus_named(&w, p, u, horizon, &id),
            IdentityKind::Minus { delta } => check_identity_minus_named(&w, delta, horizon, &id),
        }
    };
    let coarse = run(dr)?;
    Ok(run(dr / 2.0)?.with_coarse(&coarse))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dr: f64) -> crate::fieldgrid::GridSpec {
        family_grid(dr, 8.0).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_sides() {
        let w = Family::Zero.field(&grid(0.125)).unwrap();
        let r = check_identity_plus(&w, 1.0, 4, 8.0).unwrap();
        assert_eq!((r.lhs, r.rhs, r.relative_residual), (0.0, 0.0, 0.0));
        let r = check_identity_minus(&w, 0.1, 8.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn refusals() {
        let w = Family::Standing.field(&grid(0.125)).unwrap();
        assert!(matches!(check_identity_plus(&w, 2.0, 4, 8.0), Err(Error::Parameter(_))));
        assert!(matches!(check_identity_plus(&w, 0.0, 4, 8.0), Err(Error::Parameter(_))));
        assert!(check_identity_plus(&w, 1.0, 3, 8.0).is_err());
        assert!(check_identity_minus(&w, 0.0, 8.0).is_err());
        assert!(check_identity_minus(&w, 0.1, 9.0).is_err());
        assert!(check_identity_minus(&w.window(0..10, 0..20).unwrap(), 0.1, 1.0).is_err());
    }

    #[test]
    fn plus_identity_converges_at_second_order() {
        for fam in [Family::Localized, Family::Pulse, Family::Standing, Family::Reflecting] {
            let r = check_identity_refined(IdentityKind::Plus { p: 1.0, u: 2 }, fam, 1.0 / 16.0, 8.0).unwrap();
            assert!(r.relative_residual < 2e-3, "{fam}: {}", r.relative_residual);
            assert!(r.observed_order.unwrap() >= 1.8, "{fam}: {:?}", r.observed_order);
            assert!(r.signs_ok, "{fam}");
        }
    }

    #[test]
    fn minus_identity_converges_at_second_order() {
        for fam in [Family::Localized, Family::Pulse, Family::Standing, Family::Reflecting] {
            let r = check_identity_refined(IdentityKind::Minus { delta: 0.1 }, fam, 1.0 / 16.0, 8.0).unwrap();
            assert!(r.relative_residual < 2e-3, "{fam}: {}", r.relative_residual);
            assert!(r.observed_order.unwrap() >= 1.8, "{fam}: {:?}", r.observed_order);
            assert!(r.terms.get("origin_line").unwrap() <= 0.0);
        }
    }

    #[test]
    fn ghost_term_sign() {
        // σ'_U > 0, so the ghost term is a positive multiple of a square
        for z in [-40.0, -1.0, 0.0, 3.0, 100.0] {
            assert!(sigma_u_prime(z, 4.0) > 0.0);
        }
        let w = Family::Outgoing.field(&grid(0.125)).unwrap();
        let r = check_identity_plus(&w, 0.5, 8, 8.0).unwrap();
        assert!(r.terms.get("ghost").unwrap() >= 0.0);
        assert!(r.signs_ok);
    }
}

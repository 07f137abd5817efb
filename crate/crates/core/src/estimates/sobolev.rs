//! The weighted Sobolev bound on a time slice, and the pointwise identities
//! behind the second derivative bounds.

use ndarray::{Array1, ArrayView1};

use super::registry::{family_grid, frame_bump, Family, FrameFamily};
use super::report::{observed_order, EstimateReport, IdentityReport};
use crate::fieldgrid::stencil::{d1_line, d2_line, d_axis4, LeftEdge};
use crate::fieldgrid::{
    derivative, divide_by_r, second_derivative_r, second_derivative_t, DerivativeDirection, GridSpec, Parity,
    SpaceTimeField,
};
use crate::norms::quadrature::{node_max, pl_integral};
use crate::norms::Slots;
use crate::regions::DyadicRegion;
use crate::{Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// `‖h‖_{L∞(A_R)}` against `R^{−1}‖Z^{≤2}h‖_{L²(Ã_R)}` for a radial slice
/// `h` sampled at `r_j = j·dr`, with the radial field set `Z = {∂r}`.
pub fn check_weighted_sobolev(h: ArrayView1<f64>, grid: &GridSpec, big_r: u64, family_id: &str) -> Result<EstimateReport> {
    if h.len() != grid.nr() {
        return Err(Error::GridMismatch);
    }
    let plain = DyadicRegion::annulus(big_r, 0)?;
    let tilde = plain.enlarged()?;
    let reach = tilde.r_intervals_at(0.0).as_slice().iter().map(|p| p.1).fold(0.0, f64::max);
    if reach > grid.r_max {
        return Err(Error::RegionOutsideGrid(tilde.to_string()));
    }
    let dr = grid.dr;
    let mut d1 = Array1::zeros(h.len());
    let mut d2 = Array1::zeros(h.len());
    d1_line(h, dr, Some(Parity::Even), d1.view_mut());
    d2_line(h, dr, Some(Parity::Even), d2.view_mut());
    let abs_h = h.mapv(f64::abs);
    let lhs = plain
        .r_intervals_at(0.0)
        .as_slice()
        .iter()
        .filter_map(|&(a, b)| node_max(abs_h.view(), 0.0, dr, a, b))
        .fold(0.0, f64::max);
    let z: Array1<f64> = (0..h.len())
        .map(|j| {
            let r = grid.r(j);
            FOUR_PI * (h[j].abs() + d1[j].abs() + d2[j].abs()).powi(2) * r * r
        })
        .collect();
    let z_norm: f64 = tilde
        .r_intervals_at(0.0)
        .as_slice()
        .iter()
        .map(|&(a, b)| pl_integral(z.view(), 0.0, dr, a, b))
        .sum::<f64>()
        .sqrt();
    let lhs_slots = Slots(vec![("sup_annulus".into(), lhs)]);
    let rhs_slots = Slots(vec![("z2_tilde".into(), z_norm / big_r as f64)]);
    Ok(EstimateReport::new("weighted_sobolev", family_id, lhs_slots, rhs_slots, *grid))
}

/// The weighted Sobolev check for one member of a frame family at `dr` and
/// `dr/2`.
pub fn weighted_sobolev_refined(family: FrameFamily, big_r: u64, dr: f64) -> Result<EstimateReport> {
    let coarse = weighted_sobolev_at(family, big_r, dr)?;
    Ok(weighted_sobolev_at(family, big_r, dr / 2.0)?.with_coarse(&coarse))
}

/// One member of a frame family at one resolution, on `r ≤ 4R + 8`.
pub fn weighted_sobolev_at(family: FrameFamily, big_r: u64, dr: f64) -> Result<EstimateReport> {
    let id = format!("{}(R={big_r})", serde_json::to_value(family)?.as_str().unwrap_or("frame"));
    let grid = GridSpec::new(dr, 0.5, 4.0 * big_r as f64 + 8.0, 0.0)?;
    let f = frame_bump(family, big_r as f64);
    let h: Array1<f64> = (0..grid.nr()).map(|j| f(grid.r(j))).collect();
    check_weighted_sobolev(h.view(), &grid, big_r, &id)
}

/// `2Sw = (t+r)(∂t+∂r)w + (t−r)(∂t−∂r)w` pointwise.
pub fn check_scaling_identity(w: &SpaceTimeField, family_id: &str) -> Result<IdentityReport> {
    let s = derivative(w, DerivativeDirection::S)?;
    let good = derivative(w, DerivativeDirection::Good)?;
    let bad = derivative(w, DerivativeDirection::Bad)?;
    let mut rhs = good.clone();
    for n in 0..w.nt() {
        let t = w.t(n);
        for j in 0..w.nr() {
            let r = w.r(j);
            rhs.values_mut()[[n, j]] = (t + r) * good.get(n, j) + (t - r) * bad.get(n, j);
        }
    }
    let lhs = s.scale(2.0);
    let residual = lhs.sub(&rhs)?.max_abs();
    let (l, r) = (lhs.max_abs(), rhs.max_abs());
    let scale = l.max(r);
    Ok(IdentityReport {
        name: "scaling".into(),
        family_id: family_id.into(),
        lhs: l,
        rhs: r,
        residual,
        relative_residual: if scale > 0.0 { residual / scale } else { 0.0 },
        grid: *w.grid(),
        observed_order: None,
        terms: Slots(vec![("sup_rhs".into(), r)]),
        signs_ok: true,
    })
}

/// `∂t² − ∂r² = Box + (2/r)∂r` on radial data: `u_tt − u_rr` from the
/// second-order stencils on `u = W/r`, against `(W_tt − W_rr)/r + (2/r)u_r`
/// from fourth-order stencils, for `r ≥ r_min` and away from the time edges.
/// (The same second-order stencils on both sides agree to roundoff, which
/// would test nothing.)
pub fn check_box_a(w: &SpaceTimeField, r_min: f64, family_id: &str) -> Result<IdentityReport> {
    if w.parity() != Parity::Odd || !w.is_full() {
        return Err(Error::Parameter("the Box decomposition check needs the full odd field W = r u".into()));
    }
    let (dt, dr) = (w.grid().dt, w.grid().dr);
    let u = divide_by_r(w)?;
    let utt = second_derivative_t(&u)?;
    let urr = second_derivative_r(&u)?;
    let wtt = d_axis4(w.values(), dt, 0, 2, LeftEdge::Origin(Parity::Odd))?;
    let wrr = d_axis4(w.values(), dr, 1, 2, LeftEdge::Origin(Parity::Odd))?;
    let ur = d_axis4(u.values(), dr, 1, 1, LeftEdge::Origin(Parity::Even))?;
    let (mut residual, mut l, mut r_sup) = (0.0f64, 0.0f64, 0.0f64);
    for n in 2..w.nt().saturating_sub(2) {
        for j in 0..w.nr() {
            let r = w.r(j);
            if r < r_min {
                continue;
            }
            let lhs = utt.get(n, j) - urr.get(n, j);
            let rhs = (wtt[[n, j]] - wrr[[n, j]]) / r + 2.0 * ur[[n, j]] / r;
            residual = residual.max((lhs - rhs).abs());
            l = l.max(lhs.abs());
            r_sup = r_sup.max(rhs.abs());
        }
    }
    let scale = l.max(r_sup);
    Ok(IdentityReport {
        name: "box_a".into(),
        family_id: family_id.into(),
        lhs: l,
        rhs: r_sup,
        residual,
        relative_residual: if scale > 0.0 { residual / scale } else { 0.0 },
        grid: *w.grid(),
        observed_order: None,
        terms: Slots(vec![("sup_rhs".into(), r_sup)]),
        signs_ok: true,
    })
}

pub fn check_box_a_refined(family: Family, dr: f64, t_max: f64, r_min: f64) -> Result<IdentityReport> {
    let at = |dr: f64| check_box_a(&family.field(&family_grid(dr, t_max)?)?, r_min, &family.to_string());
    let coarse = at(dr)?;
    let mut fine = at(dr / 2.0)?;
    fine.observed_order = observed_order(coarse.residual, fine.residual);
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_sobolev_zero_and_scaling() {
        let grid = GridSpec::new(1.0 / 32.0, 0.5, 24.0, 0.0).unwrap();
        let zero = Array1::zeros(grid.nr());
        let r = check_weighted_sobolev(zero.view(), &grid, 4, "zero").unwrap();
        assert!(r.zero_over_zero);
        let f = frame_bump(FrameFamily::Translate, 4.0);
        let h: Array1<f64> = (0..grid.nr()).map(|j| f(grid.r(j))).collect();
        let a = check_weighted_sobolev(h.view(), &grid, 4, "t").unwrap();
        let b = check_weighted_sobolev((&h * 3.7).view(), &grid, 4, "t").unwrap();
        assert!((a.ratio - b.ratio).abs() <= 1e-10 * a.ratio);
        assert!(check_weighted_sobolev(h.view(), &grid, 16, "t").is_err());
    }

    #[test]
    fn weighted_sobolev_translates_are_r_uniform() {
        let ratios: Vec<f64> = [1u64, 2, 4, 8, 16, 32, 64]
            .iter()
            .map(|&r| {
                let rep = weighted_sobolev_refined(FrameFamily::Translate, r, 1.0 / 32.0).unwrap();
                assert!(rep.refinement_drift.unwrap() <= 0.05, "R={r}: {:?}", rep.refinement_drift);
                rep.ratio
            })
            .collect();
        // A_1 is the ball ⟨r⟩ ≤ 2, where the r² weight is not yet ~R²
        assert!(ratios[0].is_finite() && ratios[0] < 3.0 * ratios[1], "{ratios:?}");
        let (lo, hi) = ratios[1..].iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo <= 1.05, "{ratios:?}");
    }

    #[test]
    fn weighted_sobolev_dilates_decay_like_r_to_minus_half() {
        // radial data and Z = {∂r}: ‖h(·/R)‖_{L²(Ã_R)} ~ R^{3/2} once the
        // derivative terms die off, so the ratio falls as R^{−1/2}
        let ratio = |r: u64| {
            let rep = weighted_sobolev_refined(FrameFamily::Dilate, r, 1.0 / 32.0).unwrap();
            assert!(rep.refinement_drift.unwrap() <= 0.05);
            rep.ratio
        };
        let (a, b) = (ratio(16), ratio(64));
        assert!(((a / b).log2() / 2.0 - 0.5).abs() < 0.1, "{a} {b}");
        assert!(ratio(1) < 2.0 * ratio(2));
    }

    #[test]
    fn scaling_identity_is_exact_on_bilinear_input() {
        let grid = GridSpec::new(0.125, 0.5, 12.0, 8.0).unwrap();
        let w = SpaceTimeField::from_fn(grid, Parity::Odd, |t, r| t * r);
        let rep = check_scaling_identity(&w, "tr").unwrap();
        assert!(rep.relative_residual <= 1e-12, "{}", rep.relative_residual);
        // 2S(tr) = 4tr
        assert!((rep.lhs - 4.0 * 8.0 * 12.0).abs() < 1e-9);
    }

    #[test]
    fn box_a_consistency_is_second_order() {
        let rep = check_box_a_refined(Family::Standing, 1.0 / 16.0, 8.0, 1.0).unwrap();
        assert!(rep.observed_order.unwrap() >= 1.8, "{:?}", rep.observed_order);
        assert!(rep.relative_residual < 1e-2);
    }
}

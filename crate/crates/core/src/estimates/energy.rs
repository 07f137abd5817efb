//! The Hardy, local energy, ghost-weighted and combined estimates as
//! LHS/RHS ratios, every slot evaluated separately.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::registry::{family_grid, Family};
use super::report::EstimateReport;
use crate::fieldgrid::stencil::{d_axis4, LeftEdge};
use crate::fieldgrid::{divide_by_r, Parity, SpaceTimeField};
use crate::norms::quadrature::pl_integral;
use crate::norms::{le1_from_parts, mixed_norm_until, MixedNormSpec, Slots, WeightSpec};
use crate::regions::{dyadic_strips, dyadic_taus, enumerate_regions, DyadicRegion, RegionKind};
use crate::{bracket, Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Start of the dyadic time decomposition; `[0, 4]` is the initial slab.
pub const SLAB: f64 = 4.0;

const FORCING_FLAG: &str = "forcing sums use R <= tau/4 plus the core region; the iteration functional uses R <= tau/2";

/// A radial field and the derived quantities every estimate reads.
pub struct Subject {
    pub family_id: String,
    /// `W = r u`.
    pub w: SpaceTimeField,
    pub u: SpaceTimeField,
    pub ut: SpaceTimeField,
    pub ur: SpaceTimeField,
    /// `(∂t + ∂r)W = r(∂t + ∂r + 1/r)u`.
    pub y: SpaceTimeField,
    /// `W_tt − W_rr = r Box u`.
    pub boxw: SpaceTimeField,
}

impl Subject {
    pub fn from_w(w: SpaceTimeField, family_id: &str) -> Result<Self> {
        if w.parity() != Parity::Odd || !w.is_full() {
            return Err(Error::Parameter("estimates need the full odd conjugate field W = r u".into()));
        }
        // fourth-order stencils: on free waves Box W is pure stencil error
        let (dt, dr) = (w.grid().dt, w.grid().dr);
        let d = |f: &SpaceTimeField, h: f64, axis: usize, k: usize, out: Parity| -> Result<SpaceTimeField> {
            Ok(f.like(d_axis4(f.values(), h, axis, k, LeftEdge::Origin(f.parity()))?, out))
        };
        let wt = d(&w, dt, 0, 1, Parity::Odd)?;
        let wr = d(&w, dr, 1, 1, Parity::Even)?;
        let y = wt.zip_with(&wr, Parity::Unset, |a, b| a + b)?;
        let boxw = d(&w, dt, 0, 2, Parity::Odd)?.zip_with(&d(&w, dr, 1, 2, Parity::Odd)?, Parity::Odd, |a, b| a - b)?;
        let u = divide_by_r(&w)?;
        let ut = divide_by_r(&wt)?;
        let ur = d(&u, dr, 1, 1, Parity::Even)?;
        Ok(Self { family_id: family_id.into(), w, u, ut, ur, y, boxw })
    }

    pub fn family(family: Family, grid: &crate::fieldgrid::GridSpec) -> Result<Self> {
        Self::from_w(family.field(grid)?, &family.to_string())
    }

    /// The same subject for `c·W`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            family_id: format!("{}*{c}", self.family_id),
            w: self.w.scale(c),
            u: self.u.scale(c),
            ut: self.ut.scale(c),
            ur: self.ur.scale(c),
            y: self.y.scale(c),
            boxw: self.boxw.scale(c),
        }
    }

    fn t_max(&self) -> f64 {
        self.w.grid().t_max
    }

    /// Last time covered by `[0, 4] ∪ ⋃_τ [τ, 2τ]`.
    pub fn dyadic_horizon(&self) -> Result<f64> {
        dyadic_taus(self.t_max())
            .last()
            .map(|&tau| 2.0 * tau as f64)
            .ok_or_else(|| Error::Parameter(format!("t_max = {} < 8 leaves no dyadic time scale", self.t_max())))
    }

    fn zip(&self, a: &SpaceTimeField, b: &SpaceTimeField, f: impl Fn(f64, f64) -> f64) -> SpaceTimeField {
        a.zip_with(b, Parity::Unset, f).expect("subject fields share a window")
    }

    /// `(∂t + ∂r)u`.
    fn good(&self) -> SpaceTimeField {
        self.zip(&self.ut, &self.ur, |a, b| a + b)
    }

    /// `(∂t − ∂r)u`.
    fn bad(&self) -> SpaceTimeField {
        self.zip(&self.ut, &self.ur, |a, b| a - b)
    }

    /// `|∂u| = (u_t² + u_r²)^{1/2}`.
    fn grad(&self) -> SpaceTimeField {
        self.zip(&self.ut, &self.ur, f64::hypot)
    }
}

fn weight(a: f64, b: f64) -> WeightSpec {
    WeightSpec::bracket(a).with_inv_r(b)
}

/// `‖⟨r⟩^a r^{−b} f‖_{L²L²}` on `[0, T]`.
fn l2l2(f: &SpaceTimeField, a: f64, b: f64, horizon: f64) -> Result<f64> {
    mixed_norm_until(f, &MixedNormSpec::l2l2(weight(a, b)), horizon)
}

fn l2l2_on(f: &SpaceTimeField, a: f64, b: f64, region: DyadicRegion, horizon: f64) -> Result<f64> {
    mixed_norm_until(f, &MixedNormSpec::l2l2(weight(a, b)).on(region), horizon)
}

fn linf_l2(f: &SpaceTimeField, a: f64, b: f64, horizon: f64) -> Result<f64> {
    mixed_norm_until(f, &MixedNormSpec::linf_l2(weight(a, b)), horizon)
}

/// `‖⟨r⟩^a r^{−b} f(0, ·)‖_{L²}`.
fn data(f: &SpaceTimeField, a: f64, b: f64) -> Result<f64> {
    linf_l2(f, a, b, 0.0)
}

/// `∫₀^T ‖⟨r⟩^a r^{−b} f(t, ·)‖_{L²} dt`.
fn l1l2(f: &SpaceTimeField, a: f64, b: f64, horizon: f64) -> Result<f64> {
    let n_t = f.grid().n_exact(horizon)?;
    let dr = f.grid().dr;
    let r_last = f.r(f.nr() - 1);
    let mut g = Array1::zeros(f.nr());
    let rows: Array1<f64> = (0..=n_t)
        .map(|n| {
            let row = f.row(n);
            for j in 0..f.nr() {
                let r = f.r(j);
                g[j] = FOUR_PI * (bracket(r).powf(a) * row[j]).powi(2) * r.powf(2.0 - 2.0 * b);
            }
            pl_integral(g.view(), 0.0, dr, 0.0, r_last).sqrt()
        })
        .collect();
    Ok(pl_integral(rows.view(), 0.0, f.grid().dt, 0.0, horizon))
}

/// `sup_U U^{−1/2} ‖⟨r⟩^{p/2} r^{−1}(∂t+∂r)(ru)‖_{L²L²(X_U)}`.
fn ghost_sup(s: &Subject, p: f64, horizon: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for u in dyadic_strips(s.w.grid()) {
        let v = l2l2_on(&s.y, p / 2.0, 1.0, DyadicRegion::strip(u, 0)?, horizon)?;
        best = best.max(v / (u as f64).sqrt());
    }
    Ok(best)
}

/// The two dyadic forcing sums
/// `(Σ_τ Σ_{R≤τ/4} ‖⟨r⟩^{(p+1)/2} Box u‖²_{C^R_τ})^{1/2}` (with the core
/// and the initial slab added to the inner list) and
/// `Σ_U (Σ_{τ≥4U} U ‖⟨r⟩^{p/2} Box u‖²_{C^U_τ})^{1/2}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForcingSums {
    pub r_sum: f64,
    pub u_sum: f64,
    /// Core and slab shares of `r_sum²`.
    pub core_sq: f64,
    pub slab_sq: f64,
}

pub fn forcing_sums(s: &Subject, p: f64) -> Result<ForcingSums> {
    let horizon = s.dyadic_horizon()?;
    let grid = *s.w.grid();
    let (a_r, a_u) = ((p + 1.0) / 2.0, p / 2.0);
    let slab_sq = l2l2(&s.boxw, a_r, 1.0, SLAB)?.powi(2);
    let mut r_sq = slab_sq;
    let mut core_sq = 0.0;
    let mut u_inner: std::collections::BTreeMap<u64, f64> = Default::default();
    for tau in dyadic_taus(horizon) {
        for region in enumerate_regions(tau, &grid)? {
            match region.kind {
                RegionKind::R { .. } => r_sq += l2l2_on(&s.boxw, a_r, 1.0, region, horizon)?.powi(2),
                RegionKind::Core => {
                    let v = l2l2_on(&s.boxw, a_r, 1.0, region, horizon)?.powi(2);
                    r_sq += v;
                    core_sq += v;
                }
                RegionKind::U { u } => {
                    let v = l2l2_on(&s.boxw, a_u, 1.0, region, horizon)?.powi(2);
                    *u_inner.entry(u).or_default() += u as f64 * v;
                }
                _ => unreachable!("time-localized decomposition"),
            }
        }
    }
    Ok(ForcingSums { r_sum: r_sq.sqrt(), u_sum: u_inner.values().map(|v| v.sqrt()).sum(), core_sq, slab_sq })
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 2.0 { Ok(()) } else { Err(Error::Parameter(format!("p = {p} outside (0, 2)"))) }
}

fn slots(items: &[(&str, f64)]) -> Slots {
    Slots(items.iter().map(|&(k, v)| (k.to_string(), v)).collect())
}

/// Space-time Hardy inequality with a good derivative.
pub fn check_hardy(s: &Subject, p: f64) -> Result<EstimateReport> {
    check_p(p)?;
    let t = s.t_max();
    let a = (p - 1.0) / 2.0;
    let lhs = slots(&[("u_over_r_l2l2", l2l2(&s.u, a, 1.0, t)?), ("u_over_sqrt_r_linf_l2", linf_l2(&s.u, a, 0.5, t)?)]);
    let rhs = slots(&[("data", data(&s.u, a, 0.5)?), ("good_conj_l2l2", l2l2(&s.y, a, 1.0, t)?)]);
    Ok(EstimateReport::new("hardy", &s.family_id, lhs, rhs, *s.w.grid()))
}

/// `‖u‖_{LE¹} + ‖∂u‖_{L∞L²} ≲ ‖∂u(0)‖_{L²} + ∫‖Box u‖_{L²} dt`, with the
/// squared multiplier form reported in the extras.
pub fn check_le(s: &Subject) -> Result<EstimateReport> {
    let t = s.t_max();
    let grad = s.grad();
    let grad_l1 = s.zip(&s.ut, &s.ur, |a, b| a.abs() + b.abs());
    let le1 = le1_from_parts(&s.u.abs(), &grad_l1, t)?;
    let energy = linf_l2(&grad, 0.0, 0.0, t)?;
    let data0 = data(&grad, 0.0, 0.0)?;
    let forcing = l1l2(&s.boxw, 0.0, 1.0, t)?;
    let lhs = slots(&[("le1", le1), ("energy_linf_l2", energy)]);
    let rhs = slots(&[("data", data0), ("box_l1l2", forcing)]);
    let mut report = EstimateReport::new("le", &s.family_id, lhs, rhs, *s.w.grid());

    // ∫∫ |Box u|(|∂u| + |u|/r) dx = 4π ∫∫ |W_tt − W_rr|(r|∂u| + |u|) dr
    let pairing = s.boxw.zip_with(&grad, Parity::Unset, |b, g| b.abs() * g)?;
    let pairing = pairing
        .map_with_coords(Parity::Unset, |_, r, v| r * v)
        .zip_with(&s.boxw.zip_with(&s.u, Parity::Unset, |b, u| (b * u).abs())?, Parity::Unset, |a, b| a + b)?;
    let n_t = s.w.grid().n_exact(t)?;
    let rows: Array1<f64> = (0..=n_t)
        .map(|n| pl_integral(pairing.row(n), 0.0, s.w.grid().dr, 0.0, s.w.r(s.w.nr() - 1)))
        .collect();
    let pair_integral = FOUR_PI * pl_integral(rows.view(), 0.0, s.w.grid().dt, 0.0, t);
    let lhs2 = le1 * le1 + energy * energy;
    let rhs2 = data0 * data0 + pair_integral;
    report.extras.push("squared_lhs", lhs2);
    report.extras.push("squared_rhs", rhs2);
    report.extras.push("squared_ratio", super::report::ratio(lhs2, rhs2).0);
    Ok(report)
}

/// The ghost-weighted `r^p` estimate. The first slot carries `⟨r⟩^{p/2}`,
/// the power its derivation controls.
pub fn check_mr(s: &Subject, p: f64) -> Result<EstimateReport> {
    check_p(p)?;
    let t = s.dyadic_horizon()?;
    let (a, h) = ((p - 1.0) / 2.0, p / 2.0);
    let good = s.good();
    let lhs = slots(&[
        ("good_linf_l2", linf_l2(&good, h, 0.0, t)?),
        ("angular_linf_l2", 0.0),
        ("u_over_sqrt_r_linf_l2", linf_l2(&s.u, a, 0.5, t)?),
        ("good_l2l2", l2l2(&good, a, 0.0, t)?),
        ("angular_l2l2", 0.0),
        ("u_over_r_l2l2", l2l2(&s.u, a, 1.0, t)?),
        ("ghost_sup", ghost_sup(s, p, t)?),
    ]);
    let f = forcing_sums(s, p)?;
    let rhs = slots(&[
        ("data_u", data(&s.u, a, 0.5)?),
        ("data_good", data(&good, h, 0.0)?),
        ("data_angular", 0.0),
        ("forcing_r_sum", f.r_sum),
        ("forcing_u_sum", f.u_sum),
    ]);
    let mut report = EstimateReport::new("mr", &s.family_id, lhs, rhs, *s.w.grid());
    report.extras.push("core_sq", f.core_sq);
    report.extras.push("slab_sq", f.slab_sq);
    report.flag(FORCING_FLAG);
    Ok(report)
}

/// The combined estimate with the `(1+r)^{−δ}(∂t − ∂r − 1/r)` multiplier.
pub fn check_newle(s: &Subject, p: f64, delta: f64) -> Result<EstimateReport> {
    check_p(p)?;
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("delta = {delta} must be positive")));
    }
    let t = s.dyadic_horizon()?;
    let (a, h) = ((p - 1.0) / 2.0, p / 2.0);
    let (good, bad) = (s.good(), s.bad());
    let lhs = slots(&[
        ("bad_linf_l2", linf_l2(&bad, -delta / 2.0, 0.0, t)?),
        ("good_linf_l2", linf_l2(&good, h, 0.0, t)?),
        ("angular_linf_l2", 0.0),
        ("u_over_sqrt_r_linf_l2", linf_l2(&s.u, a, 0.5, t)?),
        ("bad_l2l2", l2l2(&bad, -(1.0 + delta) / 2.0, 0.0, t)?),
        ("good_l2l2", l2l2(&good, a, 0.0, t)?),
        ("angular_l2l2", 0.0),
        ("u_over_r_l2l2", l2l2(&s.u, a, 1.0, t)?),
        ("ghost_sup", ghost_sup(s, p, t)?),
    ]);
    let f = forcing_sums(s, p)?;
    let rhs = slots(&[
        ("data_bad", data(&bad, -delta / 2.0, 0.0)?),
        ("data_good", data(&good, h, 0.0)?),
        ("data_angular", 0.0),
        ("data_u_over_r", data(&s.u, h, 1.0)?),
        ("box_l2l2", l2l2(&s.boxw, (1.0 - delta) / 2.0, 1.0, t)?),
        ("forcing_r_sum", f.r_sum),
        ("forcing_u_sum", f.u_sum),
    ]);
    let mut report = EstimateReport::new("newle", &s.family_id, lhs, rhs, *s.w.grid());
    report.extras.push("core_sq", f.core_sq);
    report.extras.push("slab_sq", f.slab_sq);
    report.flag(FORCING_FLAG);
    Ok(report)
}

/// One of the energy-type checks with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum EnergyCheck {
    Hardy { p: f64 },
    Le,
    Mr { p: f64 },
    Newle { p: f64, delta: f64 },
}

impl EnergyCheck {
    pub fn run(&self, s: &Subject) -> Result<EstimateReport> {
        match *self {
            EnergyCheck::Hardy { p } => check_hardy(s, p),
            EnergyCheck::Le => check_le(s),
            EnergyCheck::Mr { p } => check_mr(s, p),
            EnergyCheck::Newle { p, delta } => check_newle(s, p, delta),
        }
    }

    /// Runs on a registry family at `dr` and `dr/2`; returns the finer
    /// report with its refinement drift.
    pub fn run_refined(&self, family: Family, dr: f64, t_max: f64) -> Result<EstimateReport> {
        let at = |dr: f64| -> Result<EstimateReport> { self.run(&Subject::family(family, &family_grid(dr, t_max)?)?) };
        let coarse = at(dr)?;
        Ok(at(dr / 2.0)?.with_coarse(&coarse))
    }
}

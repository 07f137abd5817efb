//! Dyadic space-time regions inside the cone `C = {r ≤ t + 2}`, their
//! enlargements, the cutoffs `χ`, `β`, and the ghost weight `σ_U`.
//!
//! Every region is a time interval times, at each time, at most two closed
//! r-intervals. Norms integrate over those intervals; masks sample them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::fieldgrid::{GridSpec, Parity, SpaceTimeField};
use crate::{bracket, Error, Result};

/// Slack for closed-interval membership of lattice points.
pub const TOL: f64 = 1e-9;

const LOWER: f64 = 7.0 / 8.0;
const UPPER: f64 = 17.0 / 16.0;

/// Quintic smoothstep on [7/8, 1]: `χ = 0` below, `1` above, C² overall.
pub fn chi(z: f64) -> f64 {
    let s = (8.0 * (z - LOWER)).clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

pub fn chi_prime(z: f64) -> f64 {
    let s = 8.0 * (z - LOWER);
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    8.0 * 30.0 * s * s * (s - 1.0) * (s - 1.0)
}

/// `β(z) = χ(z) − χ(z − 9/8)`: one on [1, 2], zero off [7/8, 17/8].
pub fn beta(z: f64) -> f64 {
    chi(z) - chi(z - 9.0 / 8.0)
}

/// Smooth plateau: one on [a, b], zero outside `[7a/8, 17b/16]`, with the
/// same transition as `β` (`taper(z, 1, 2) = β(z)`). `a ≤ 0` drops the lower
/// transition and `b = ∞` the upper one.
pub fn taper(x: f64, a: f64, b: f64) -> f64 {
    let lo = if a > 0.0 { chi(x / a) } else if x >= a { 1.0 } else { 0.0 };
    let hi = if b.is_finite() { chi(LOWER + 16.0 * (b * UPPER - x) / b / 8.0) } else { 1.0 };
    lo * hi
}

/// Ghost weight `σ_U(z) = z / (U + |z|)`.
pub fn sigma_u(z: f64, u: f64) -> f64 {
    z / (u + z.abs())
}

pub fn sigma_u_prime(z: f64, u: f64) -> f64 {
    let d = u + z.abs();
    u / (d * d)
}

pub fn is_dyadic(x: u64) -> bool {
    x >= 1 && x.is_power_of_two()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// `R ≤ r ≤ 2R` (`r ≤ 2` when `R = 1`).
    R { r: u64 },
    /// `U ≤ t − r ≤ 2U` (`|t − r| ≤ 2` when `U = 1`).
    U { u: u64 },
    /// `r ≥ τ/2` and `t − r ≥ τ/2`.
    Core,
    /// `A_R = {R ≤ ⟨r⟩ ≤ 2R}`, all times.
    Annulus { r: u64 },
    /// `X_U = {U ≤ ⟨t − r⟩ ≤ 2U}`, all times.
    Strip { u: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicRegion {
    /// Time scale; `None` for the time-global kinds.
    pub tau: Option<u64>,
    pub kind: RegionKind,
    /// 0 plain, 1 tilde, 2 double tilde.
    pub enlargement: u8,
}

/// At most two closed r-intervals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Intervals {
    parts: [(f64, f64); 2],
    len: usize,
}

impl Intervals {
    fn push(&mut self, a: f64, b: f64) {
        if b >= a {
            self.parts[self.len] = (a, b);
            self.len += 1;
        }
    }

    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.parts[..self.len]
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, r: f64) -> bool {
        self.as_slice().iter().any(|&(a, b)| r >= a - TOL && r <= b + TOL)
    }
}

impl DyadicRegion {
    fn check_scale(x: u64, what: &str) -> Result<()> {
        if is_dyadic(x) { Ok(()) } else { Err(Error::InvalidRegion(format!("{what} = {x} is not a power of two"))) }
    }

    fn check_enlargement(e: u8) -> Result<()> {
        if e <= 2 { Ok(()) } else { Err(Error::InvalidRegion(format!("enlargement {e} > 2"))) }
    }

    /// `C^R_τ` with `1 ≤ R ≤ τ/4`.
    pub fn r_kind(tau: u64, r: u64, enlargement: u8) -> Result<Self> {
        Self::check_scale(tau, "tau")?;
        Self::check_scale(r, "R")?;
        Self::check_enlargement(enlargement)?;
        if 4 * r > tau {
            return Err(Error::InvalidRegion(format!("R = {r} exceeds tau/4 = {}", tau / 4)));
        }
        Ok(Self { tau: Some(tau), kind: RegionKind::R { r }, enlargement })
    }

    /// `C^U_τ` with `1 ≤ U ≤ τ/4`.
    pub fn u_kind(tau: u64, u: u64, enlargement: u8) -> Result<Self> {
        Self::check_scale(tau, "tau")?;
        Self::check_scale(u, "U")?;
        Self::check_enlargement(enlargement)?;
        if 4 * u > tau {
            return Err(Error::InvalidRegion(format!("U = {u} exceeds tau/4 = {}", tau / 4)));
        }
        Ok(Self { tau: Some(tau), kind: RegionKind::U { u }, enlargement })
    }

    /// `C^{τ/2}_τ`.
    pub fn core(tau: u64, enlargement: u8) -> Result<Self> {
        Self::check_scale(tau, "tau")?;
        Self::check_enlargement(enlargement)?;
        if tau < 2 {
            return Err(Error::InvalidRegion("core needs tau >= 2".into()));
        }
        Ok(Self { tau: Some(tau), kind: RegionKind::Core, enlargement })
    }

    pub fn annulus(r: u64, enlargement: u8) -> Result<Self> {
        Self::check_scale(r, "R")?;
        Self::check_enlargement(enlargement)?;
        Ok(Self { tau: None, kind: RegionKind::Annulus { r }, enlargement })
    }

    pub fn strip(u: u64, enlargement: u8) -> Result<Self> {
        Self::check_scale(u, "U")?;
        Self::check_enlargement(enlargement)?;
        Ok(Self { tau: None, kind: RegionKind::Strip { u }, enlargement })
    }

    pub fn enlarged(&self) -> Result<Self> {
        Self::check_enlargement(self.enlargement + 1)?;
        Ok(Self { enlargement: self.enlargement + 1, ..*self })
    }

    pub fn plain(&self) -> Self {
        Self { enlargement: 0, ..*self }
    }

    fn factors(&self) -> (f64, f64) {
        let e = self.enlargement as i32;
        (LOWER.powi(e), UPPER.powi(e))
    }

    /// Closed time interval; `None` for the time-global kinds.
    pub fn time_bounds(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.factors();
        self.tau.map(|tau| (tau as f64 * lo, 2.0 * tau as f64 * hi))
    }

    /// Dyadic size entering the region's weights: R, U, or τ/2 for the core.
    pub fn scale(&self) -> f64 {
        match self.kind {
            RegionKind::R { r } | RegionKind::Annulus { r } => r as f64,
            RegionKind::U { u } | RegionKind::Strip { u } => u as f64,
            RegionKind::Core => self.tau.unwrap_or(2) as f64 / 2.0,
        }
    }

    /// r-section at time t, ignoring the time bounds.
    pub fn r_intervals_at(&self, t: f64) -> Intervals {
        let (lo, hi) = self.factors();
        let mut out = Intervals::default();
        let cone = t + 2.0;
        let clip = |out: &mut Intervals, a: f64, b: f64| out.push(a.max(0.0), b.min(cone));
        match self.kind {
            RegionKind::R { r: 1 } => clip(&mut out, 0.0, 2.0 * hi),
            RegionKind::R { r } => clip(&mut out, r as f64 * lo, 2.0 * r as f64 * hi),
            RegionKind::U { u: 1 } => clip(&mut out, t - 2.0 * hi, t + 2.0 * hi),
            RegionKind::U { u } => clip(&mut out, t - 2.0 * u as f64 * hi, t - u as f64 * lo),
            RegionKind::Core => {
                let h = self.tau.expect("core has tau") as f64 / 2.0 * lo;
                clip(&mut out, h, t - h)
            }
            RegionKind::Annulus { r } => {
                let (a, b) = bracket_inverse(r as f64 * lo, 2.0 * r as f64 * hi);
                out.push(a, b);
            }
            RegionKind::Strip { u } => {
                let (zl, zh) = bracket_inverse(u as f64 * lo, 2.0 * u as f64 * hi);
                if zl == 0.0 {
                    out.push((t - zh).max(0.0), t + zh);
                } else {
                    out.push((t - zh).max(0.0), t - zl);
                    out.push((t + zl).max(0.0), t + zh);
                }
            }
        }
        out
    }

    pub fn contains(&self, t: f64, r: f64) -> bool {
        if let Some((a, b)) = self.time_bounds() {
            if t < a - TOL || t > b + TOL {
                return false;
            }
        }
        self.r_intervals_at(t).contains(r)
    }

    /// Smooth cutoff adapted to the region: one on this region, supported
    /// in its next enlargement, built from products of `β`-type tapers.
    pub fn smooth_weight(&self, t: f64, r: f64) -> f64 {
        let (lo, hi) = self.factors();
        let time = match self.tau {
            Some(tau) => {
                if r > t + 2.0 + TOL {
                    return 0.0;
                }
                taper(t, tau as f64 * lo, 2.0 * tau as f64 * hi)
            }
            None => 1.0,
        };
        let space = match self.kind {
            RegionKind::R { r: 1 } => taper(r, 0.0, 2.0 * hi),
            RegionKind::R { r: big } => taper(r, big as f64 * lo, 2.0 * big as f64 * hi),
            RegionKind::U { u: 1 } => taper((t - r).abs(), 0.0, 2.0 * hi),
            RegionKind::U { u } => taper(t - r, u as f64 * lo, 2.0 * u as f64 * hi),
            RegionKind::Core => {
                let h = self.tau.expect("core has tau") as f64 / 2.0 * lo;
                taper(r, h, f64::INFINITY) * taper(t - r, h, f64::INFINITY)
            }
            RegionKind::Annulus { r: 1 } => taper(bracket(r), 0.0, 2.0 * hi),
            RegionKind::Annulus { r: big } => taper(bracket(r), big as f64 * lo, 2.0 * big as f64 * hi),
            RegionKind::Strip { u: 1 } => taper(bracket(t - r), 0.0, 2.0 * hi),
            RegionKind::Strip { u } => taper(bracket(t - r), u as f64 * lo, 2.0 * u as f64 * hi),
        };
        time * space
    }
}

/// `{x ≥ 0 : a ≤ ⟨x⟩ ≤ b}` as an interval `[lo, hi]`.
fn bracket_inverse(a: f64, b: f64) -> (f64, f64) {
    let inv = |y: f64| if y <= 1.0 { 0.0 } else { (y * y - 1.0).sqrt() };
    (inv(a), inv(b))
}

impl fmt::Display for DyadicRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tilde = "~".repeat(self.enlargement as usize);
        match (self.kind, self.tau) {
            (RegionKind::R { r }, Some(t)) => write!(f, "C{tilde}[tau={t},R={r}]"),
            (RegionKind::U { u }, Some(t)) => write!(f, "C{tilde}[tau={t},U={u}]"),
            (RegionKind::Core, Some(t)) => write!(f, "C{tilde}[tau={t},core]"),
            (RegionKind::Annulus { r }, _) => write!(f, "A{tilde}[R={r}]"),
            (RegionKind::Strip { u }, _) => write!(f, "X{tilde}[U={u}]"),
            _ => write!(f, "{self:?}"),
        }
    }
}

/// All plain regions decomposing `C_τ`: R-kind and U-kind for dyadic
/// `1..=τ/4`, then the core.
pub fn enumerate_regions(tau: u64, grid: &GridSpec) -> Result<Vec<DyadicRegion>> {
    if !is_dyadic(tau) {
        return Err(Error::InvalidRegion(format!("tau = {tau} is not a power of two")));
    }
    if tau < 4 || 2.0 * tau as f64 > grid.t_max + TOL {
        return Err(Error::InvalidRegion(format!(
            "tau = {tau} outside 4 <= tau <= t_max/2 = {}",
            grid.t_max / 2.0
        )));
    }
    let mut out = Vec::new();
    let scales = || std::iter::successors(Some(1u64), |s| Some(s * 2)).take_while(|s| 4 * s <= tau);
    for r in scales() {
        out.push(DyadicRegion::r_kind(tau, r, 0)?);
    }
    for u in scales() {
        out.push(DyadicRegion::u_kind(tau, u, 0)?);
    }
    out.push(DyadicRegion::core(tau, 0)?);
    Ok(out)
}

/// Dyadic τ with `[τ, 2τ] ⊂ [0, t_max]` and `τ ≥ 4`.
pub fn dyadic_taus(t_max: f64) -> Vec<u64> {
    std::iter::successors(Some(4u64), |t| Some(t * 2)).take_while(|&t| 2.0 * t as f64 <= t_max + TOL).collect()
}

/// Dyadic R with `A_R` meeting `[0, r_max]`.
pub fn dyadic_annuli(r_max: f64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |r| Some(r * 2))
        .take_while(|&r| bracket_inverse(r as f64, 0.0).0 <= r_max)
        .collect()
}

/// Dyadic U with `X_U` meeting the grid: `⟨t − r⟩ ≤ max(t_max, r_max)`.
pub fn dyadic_strips(grid: &GridSpec) -> Vec<u64> {
    let reach = grid.t_max.max(grid.r_max);
    std::iter::successors(Some(1u64), |u| Some(u * 2))
        .take_while(|&u| bracket_inverse(u as f64, 0.0).0 <= reach)
        .collect()
}

/// A region realized on a grid.
#[derive(Clone, Debug)]
pub struct RegionMask {
    pub region: DyadicRegion,
    pub weights: SpaceTimeField,
    /// No grid point carries weight.
    pub empty: bool,
    /// The region extends beyond the grid's time range.
    pub truncated: bool,
}

impl RegionMask {
    pub fn grid(&self) -> &GridSpec {
        self.weights.grid()
    }
}

fn finish_mask(region: DyadicRegion, grid: &GridSpec, weights: SpaceTimeField) -> RegionMask {
    let empty = weights.values().iter().all(|&w| w == 0.0);
    let truncated = region.time_bounds().is_some_and(|(_, b)| b > grid.t_max + TOL);
    RegionMask { region, weights, empty, truncated }
}

/// Sharp indicator of the region (and of its hull when enlarged).
pub fn realize_mask(region: &DyadicRegion, grid: &GridSpec) -> RegionMask {
    let w = SpaceTimeField::from_fn(*grid, Parity::Unset, |t, r| if region.contains(t, r) { 1.0 } else { 0.0 });
    finish_mask(*region, grid, w)
}

/// `β`-product cutoff: one on the region, vanishing outside its next enlargement.
pub fn realize_smooth_mask(region: &DyadicRegion, grid: &GridSpec) -> RegionMask {
    let w = SpaceTimeField::from_fn(*grid, Parity::Unset, |t, r| region.smooth_weight(t, r));
    let hull = region.enlarged().unwrap_or(*region);
    finish_mask(hull, grid, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cutoff_values() {
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(0.5), 0.0);
        assert_eq!(chi(15.0 / 16.0), 0.5);
        assert_eq!(beta(1.5), 1.0);
        assert_eq!(beta(2.5), 0.0);
        assert_eq!(beta(7.0 / 8.0), 0.0);
        assert_eq!(beta(17.0 / 8.0), 0.0);
        assert_eq!(beta(1.0), 1.0);
        assert_eq!(beta(2.0), 1.0);
        for k in 0..200 {
            let z = k as f64 / 100.0;
            assert_eq!(taper(z, 1.0, 2.0), beta(z));
        }
    }

    #[test]
    fn chi_is_monotone_and_c2() {
        let h = 1e-4;
        let mut prev = 0.0;
        let mut max_second: f64 = 0.0;
        for k in 0..3000 {
            let z = 0.8 + k as f64 * h;
            let c = chi(z);
            assert!(c >= prev && (0.0..=1.0).contains(&c));
            assert!(chi_prime(z) >= 0.0);
            prev = c;
            let d2 = (chi(z + h) - 2.0 * c + chi(z - h)) / (h * h);
            max_second = max_second.max(d2.abs());
        }
        // analytic bound: 64 · max|S''| = 64 · 10/sqrt(3)
        assert!(max_second <= 64.0 * 10.0 / 3f64.sqrt() * 1.01);
        assert!(chi(0.9) > 0.0 && chi(0.9) < chi(0.95) && chi(0.95) < 1.0);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_u(0.0, 4.0), 0.0);
        assert_eq!(sigma_u(2.0, 2.0), 0.5);
        assert_eq!(sigma_u_prime(0.0, 2.0), 0.5);
    }

    #[test]
    fn ghost_derivative_lower_bound_on_strips() {
        let mut worst = f64::INFINITY;
        for u in [1u64, 2, 4, 8, 64, 1024, 1 << 20] {
            let (zl, zh) = bracket_inverse(u as f64, 2.0 * u as f64);
            for k in 0..=2000 {
                let z = zl + (zh - zl) * k as f64 / 2000.0;
                for s in [z, -z] {
                    worst = worst.min(sigma_u_prime(s, u as f64) * bracket(s));
                }
            }
        }
        assert!(worst >= 2.0 / 9.0, "{worst}");
        assert!(worst < 2.0 / 9.0 + 1e-3);
    }

    #[test]
    fn enumeration() {
        let g = GridSpec::new(0.25, 0.5, 132.0, 128.0).unwrap();
        let four = enumerate_regions(4, &g).unwrap();
        assert_eq!(four.len(), 3);
        assert_eq!(four[0].kind, RegionKind::R { r: 1 });
        assert_eq!(four[1].kind, RegionKind::U { u: 1 });
        assert_eq!(four[2].kind, RegionKind::Core);
        assert_eq!(enumerate_regions(16, &g).unwrap().len(), 7);
        assert!(enumerate_regions(2, &g).is_err());
        assert!(enumerate_regions(12, &g).is_err());
        assert!(enumerate_regions(128, &g).is_err());
        for tau in [4u64, 8, 16, 32, 64] {
            let n = enumerate_regions(tau, &g).unwrap().len();
            assert_eq!(n, 2 * (tau / 4).trailing_zeros() as usize + 3);
        }
    }

    #[test]
    fn invalid_regions_refused() {
        assert!(DyadicRegion::r_kind(16, 8, 0).is_err());
        assert!(DyadicRegion::u_kind(16, 3, 0).is_err());
        assert!(DyadicRegion::r_kind(12, 1, 0).is_err());
        assert!(DyadicRegion::core(16, 3).is_err());
    }

    #[test]
    fn r_one_is_supported_in_r_le_2() {
        let g = GridSpec::new(1.0 / 16.0, 0.5, 36.0, 32.0).unwrap();
        let m = realize_mask(&DyadicRegion::r_kind(8, 1, 0).unwrap(), &g);
        let w = &m.weights;
        for n in 0..w.nt() {
            for j in 0..w.nr() {
                if w.get(n, j) != 0.0 {
                    assert!(w.r(j) <= 2.0 && w.t(n) >= 8.0 && w.t(n) <= 16.0);
                }
            }
        }
        assert!(!m.empty && !m.truncated);
        assert_eq!(w.get(g.n_exact(8.0).unwrap(), 32), 1.0);
    }

    #[test]
    fn plain_masks_cover_each_slab_exactly() {
        let g = GridSpec::new(1.0 / 8.0, 1.0, 132.0, 128.0).unwrap();
        for tau in dyadic_taus(g.t_max) {
            let regions = enumerate_regions(tau, &g).unwrap();
            for n in g.n_at_or_above(tau as f64)..=g.n_at_or_below(2.0 * tau as f64).unwrap() {
                let t = g.t(n);
                for j in 0..=g.j_at_or_below(t + 2.0).unwrap() {
                    let r = g.r(j);
                    assert!(regions.iter().any(|q| q.contains(t, r)), "tau {tau} t {t} r {r}");
                }
            }
        }
    }

    #[test]
    fn literal_definitions_hold_on_masks() {
        let g = GridSpec::new(1.0 / 8.0, 1.0, 132.0, 128.0).unwrap();
        for tau in [16u64, 32, 64] {
            for q in enumerate_regions(tau, &g).unwrap() {
                let (ta, tb) = q.time_bounds().unwrap();
                for n in g.n_at_or_above(ta)..=g.n_at_or_below(tb).unwrap() {
                    let t = g.t(n);
                    for j in 0..g.nr() {
                        let r = g.r(j);
                        if !q.contains(t, r) {
                            continue;
                        }
                        assert!(r <= t + 2.0 + TOL);
                        match q.kind {
                            RegionKind::R { r: 1 } => assert!(r <= 2.0 + TOL),
                            RegionKind::R { r: big } => {
                                let big = big as f64;
                                assert!(r >= big - TOL && r <= 2.0 * big + TOL);
                                let ratio = bracket(r) / big;
                                assert!((0.25..=4.0).contains(&ratio));
                            }
                            RegionKind::U { u: 1 } => assert!((t - r).abs() <= 2.0 + TOL),
                            RegionKind::U { u } => {
                                let u = u as f64;
                                assert!(t - r >= u - TOL && t - r <= 2.0 * u + TOL);
                                assert!(r >= tau as f64 * 7.0 / 8.0 / 2.0 - TOL);
                            }
                            RegionKind::Core => {
                                assert!(r >= tau as f64 / 2.0 - TOL && t - r >= tau as f64 / 2.0 - TOL)
                            }
                            _ => unreachable!(),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn enlargements_nest() {
        let g = GridSpec::new(1.0 / 8.0, 1.0, 68.0, 64.0).unwrap();
        for q in enumerate_regions(16, &g).unwrap() {
            let t1 = q.enlarged().unwrap();
            let t2 = t1.enlarged().unwrap();
            assert!(t2.enlarged().is_err());
            for n in 0..g.nt() {
                for j in 0..g.nr() {
                    let (t, r) = (g.t(n), g.r(j));
                    if q.contains(t, r) {
                        assert!(t1.contains(t, r));
                    }
                    if t1.contains(t, r) {
                        assert!(t2.contains(t, r));
                    }
                }
            }
        }
        let (a, b) = DyadicRegion::r_kind(16, 2, 1).unwrap().time_bounds().unwrap();
        assert_eq!((a, b), (14.0, 34.0));
        let i = DyadicRegion::r_kind(16, 2, 1).unwrap().r_intervals_at(20.0);
        assert_eq!(i.as_slice(), &[(1.75, 4.25)]);
    }

    #[test]
    fn smooth_masks_vanish_outside_next_enlargement() {
        let g = GridSpec::new(1.0 / 8.0, 1.0, 68.0, 64.0).unwrap();
        for q in enumerate_regions(16, &g).unwrap() {
            let hull = q.enlarged().unwrap();
            let m = realize_smooth_mask(&q, &g);
            assert_eq!(m.region, hull);
            for n in 0..g.nt() {
                for j in 0..g.nr() {
                    let (t, r) = (g.t(n), g.r(j));
                    let w = m.weights.get(n, j);
                    assert!((0.0..=1.0).contains(&w));
                    if q.contains(t, r) && !(matches!(q.kind, RegionKind::U { u: 1 }) && r > t + 2.0) {
                        assert!((w - 1.0).abs() < 1e-12, "{q} t {t} r {r} w {w}");
                    }
                    if w > 0.0 {
                        assert!(hull.contains(t, r), "{q} t {t} r {r} w {w}");
                    }
                }
            }
        }
    }

    #[test]
    fn annuli_and_strips() {
        let a1 = DyadicRegion::annulus(1, 0).unwrap().r_intervals_at(0.0);
        assert_eq!(a1.as_slice()[0].0, 0.0);
        assert!((a1.as_slice()[0].1 - 3f64.sqrt()).abs() < 1e-15);
        let x4 = DyadicRegion::strip(4, 0).unwrap().r_intervals_at(20.0);
        assert_eq!(x4.as_slice().len(), 2);
        for &(a, b) in x4.as_slice() {
            for r in [a, b] {
                let z = bracket(20.0 - r);
                assert!((4.0 - 1e-12..=8.0 + 1e-12).contains(&z));
            }
        }
        assert_eq!(dyadic_annuli(10.0), vec![1, 2, 4, 8]);
        let masks = realize_mask(&DyadicRegion::strip(1, 0).unwrap(), &GridSpec::new(0.25, 1.0, 12.0, 8.0).unwrap());
        assert!(!masks.empty && !masks.truncated);
    }

    #[test]
    fn empty_and_truncated_masks_are_flagged() {
        let g = GridSpec::new(0.25, 1.0, 24.0, 20.0).unwrap();
        let m = realize_mask(&DyadicRegion::r_kind(64, 8, 0).unwrap(), &g);
        assert!(m.empty && m.truncated);
        let m = realize_mask(&DyadicRegion::r_kind(16, 2, 0).unwrap(), &g);
        assert!(!m.empty && m.truncated);
    }

    proptest! {
        #[test]
        fn sigma_is_odd_increasing_bounded(z in -1e6..1e6f64, dz in 1e-6..10.0f64, k in 0u32..12) {
            let u = (1u64 << k) as f64;
            prop_assert_eq!(sigma_u(-z, u), -sigma_u(z, u));
            prop_assert!(sigma_u(z, u).abs() < 1.0);
            prop_assert!(sigma_u(z + dz, u) > sigma_u(z, u));
            prop_assert!(sigma_u_prime(z, u) > 0.0);
        }

        #[test]
        fn beta_properties(z in -2.0..5.0f64) {
            let b = beta(z);
            prop_assert!((0.0..=1.0).contains(&b));
            if (1.0..=2.0).contains(&z) { prop_assert_eq!(b, 1.0); }
            if !(7.0 / 8.0..=17.0 / 8.0).contains(&z) { prop_assert_eq!(b, 0.0); }
            prop_assert!(chi(z) + (1.0 - chi(z)) == 1.0);
        }

        #[test]
        fn covering_at_random_points(k in 2u32..8, a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let g = GridSpec::new(0.25, 1.0, 516.0, 512.0).unwrap();
            let tau = 1u64 << k;
            let t = tau as f64 * (1.0 + a);
            let r = (t + 2.0) * b;
            let regions = enumerate_regions(tau, &g).unwrap();
            prop_assert!(regions.iter().any(|q| q.contains(t, r)));
        }
    }
}

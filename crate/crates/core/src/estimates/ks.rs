//! Space-time Klainerman–Sobolev bounds on dyadic regions, and the second
//! derivative forms that trade two vector fields for `Box`.
//!
//! U-kind regions are thin diagonal strips, so their bounding box is mostly
//! empty. The subject is therefore fetched and differentiated in node-aligned
//! time slabs, each with its own index window; squared L² norms add across
//! slabs exactly (the time quadrature is piecewise linear between nodes).

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::registry::{family_grid, traveling_bump, Track};
use super::report::{ratio, EstimateReport};
use crate::fieldgrid::{box_direct, derivative, visit_z_words, DerivativeDirection, GridSpec, Jet, Parity, SpaceTimeField};
use crate::norms::{mixed_norm, MixedNormSpec, Slots, WeightSpec};
use crate::regions::DyadicRegion;
use crate::wavesolver::{solve, InitialData, Mode, Profile, RecordWindow, SolveConfig};
use crate::{Error, Result};

/// Cells kept around each slab window so its stencils never reach the region.
pub const MARGIN: usize = 16;

/// Signal below this multiple of the roundoff estimate is flagged.
const NOISE_FACTOR: f64 = 1e3;

/// Which dyadic region a space-time check localizes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "scale", rename_all = "snake_case")]
pub enum KsRegion {
    R(u64),
    U(u64),
}

impl KsRegion {
    pub fn region(self, tau: u64) -> Result<DyadicRegion> {
        match self {
            KsRegion::R(r) => DyadicRegion::r_kind(tau, r, 0),
            KsRegion::U(u) => DyadicRegion::u_kind(tau, u, 0),
        }
    }

    pub fn scale(self) -> f64 {
        match self {
            KsRegion::R(s) | KsRegion::U(s) => s as f64,
        }
    }

    pub fn track(self) -> Track {
        match self {
            KsRegion::R(_) => Track::R,
            KsRegion::U(_) => Track::U,
        }
    }

    /// Slab duration: about the strip width, so slab windows stay compact.
    fn span(self) -> f64 {
        (2.0 * self.scale()).max(4.0)
    }
}

/// Samples of the subject on absolute `(n, j)` index ranges of one grid.
pub struct Source<'a> {
    grid: GridSpec,
    fetch: Box<dyn Fn(Range<usize>, Range<usize>) -> Result<SpaceTimeField> + 'a>,
}

impl<'a> Source<'a> {
    /// Windows of an already sampled field (full or windowed).
    pub fn field(w: &'a SpaceTimeField) -> Self {
        Self { grid: *w.grid(), fetch: Box::new(move |n, j| w.window(n, j)) }
    }

    /// A closed form, sampled only where a slab needs it.
    pub fn closed_form(grid: GridSpec, parity: Parity, f: impl Fn(f64, f64) -> f64 + 'a) -> Self {
        Self { grid, fetch: Box::new(move |n, j| Ok(SpaceTimeField::window_from_fn(grid, n, j, parity, &f))) }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

/// Rows `first..=last` of the time quadrature, and the index window whose
/// samples they are computed from.
#[derive(Clone, Debug)]
struct Slab {
    first: usize,
    last: usize,
    n: Range<usize>,
    j: Range<usize>,
}

impl Slab {
    fn rows(&self, f: &SpaceTimeField) -> Result<SpaceTimeField> {
        let j0 = f.origin().1;
        f.window(self.first..self.last + 1, j0..j0 + f.nr())
    }

    fn meets(&self, f: &SpaceTimeField, region: &DyadicRegion) -> bool {
        region.time_bounds().is_some_and(|(a, b)| f.t(self.last - f.origin().0) >= a && f.t(self.first - f.origin().0) <= b)
    }

    fn l2_sq(&self, f: &SpaceTimeField, region: DyadicRegion) -> Result<f64> {
        if !self.meets(f, &region) {
            return Ok(0.0);
        }
        Ok(mixed_norm(&self.rows(f)?, &MixedNormSpec::l2l2(WeightSpec::default()).on(region))?.powi(2))
    }

    fn sup(&self, f: &SpaceTimeField, region: DyadicRegion) -> Result<f64> {
        if !self.meets(f, &region) {
            return Ok(0.0);
        }
        mixed_norm(&self.rows(f)?, &MixedNormSpec::linf_linf(WeightSpec::default()).on(region))
    }
}

/// Node-aligned slabs of about `span` time units covering `region`, each
/// padded by `margin` cells on every side.
fn slabs(grid: &GridSpec, region: &DyadicRegion, span: f64, margin: usize) -> Result<Vec<Slab>> {
    let outside = || Error::RegionOutsideGrid(format!("{region} (with {margin} margin cells)"));
    let (ta, tb) = region
        .time_bounds()
        .ok_or_else(|| Error::InvalidRegion(format!("{region} has no time bounds")))?;
    let n_lo = grid.n_at_or_below(ta).ok_or_else(outside)?;
    let n_hi = grid.n_at_or_above(tb);
    if n_lo < margin || n_hi + margin > grid.n_max() {
        return Err(outside());
    }
    let step = ((span / grid.dt).round() as usize).max(1);
    let mut out = Vec::new();
    let mut first = n_lo;
    loop {
        let last = (first + step).min(n_hi);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for n in first..=last {
            for &(a, b) in region.r_intervals_at(grid.t(n)).as_slice() {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        if hi >= lo {
            let j_a = grid.j_at_or_above(lo).saturating_sub(margin);
            let j_b = grid.j_at_or_below(hi).unwrap_or(0) + margin;
            if j_b > grid.j_max() {
                return Err(outside());
            }
            out.push(Slab { first, last, n: first - margin..last + margin + 1, j: j_a..j_b + 1 });
        }
        if last == n_hi {
            return Ok(out);
        }
        first = last;
    }
}

/// Pointwise `Σ_{|μ|≤n} |op(Z^μ w)|` for several operators at once.
fn word_sums<const K: usize>(
    w: &SpaceTimeField,
    n: usize,
    op: impl Fn(&Jet) -> Result<[SpaceTimeField; K]>,
) -> Result<[SpaceTimeField; K]> {
    let zero = w.map(Parity::Unset, |_| 0.0);
    let mut sums: [SpaceTimeField; K] = std::array::from_fn(|_| zero.clone());
    visit_z_words(&Jet::from_field(w.clone()), n, |_, jet| {
        for (acc, f) in sums.iter_mut().zip(op(jet)?) {
            *acc = acc.zip_with(&f, Parity::Unset, |a, b| a + b.abs())?;
        }
        Ok(())
    })?;
    Ok(sums)
}

fn hypot(a: &SpaceTimeField, b: &SpaceTimeField) -> Result<SpaceTimeField> {
    a.zip_with(b, Parity::Unset, f64::hypot)
}

fn gradient_abs(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    hypot(&derivative(f, DerivativeDirection::Dt)?, &derivative(f, DerivativeDirection::Dr)?)
}

/// Weights on `‖Z^{≤2}w‖` and `‖∂r Z^{≤2}w‖`.
fn ks_weights(kind: KsRegion, tau: f64) -> (f64, f64) {
    let s = kind.scale();
    match kind {
        KsRegion::R(_) => (tau.powf(-0.5) * s.powf(-1.5), tau.powf(-0.5) * s.powf(-0.5)),
        KsRegion::U(_) => (tau.powf(-1.5) * s.powf(-0.5), s.sqrt() * tau.powf(-1.5)),
    }
}

/// `‖w‖_{L∞L∞(C)}` against the two-term space-time Sobolev bound on `C̃`;
/// for R-kind regions the product form is reported in the extras.
pub fn check_spacetime_ks(w: &SpaceTimeField, tau: u64, kind: KsRegion, family_id: &str) -> Result<EstimateReport> {
    spacetime_ks(&Source::field(w), tau, kind, family_id)
}

pub fn spacetime_ks(source: &Source, tau: u64, kind: KsRegion, family_id: &str) -> Result<EstimateReport> {
    let region = kind.region(tau)?;
    let tilde = region.enlarged()?;
    let (mut a2, mut b2, mut lhs) = (0.0, 0.0, 0.0f64);
    for slab in slabs(source.grid(), &tilde, kind.span(), MARGIN)? {
        let w = (source.fetch)(slab.n.clone(), slab.j.clone())?;
        let [z2, dz2] = word_sums(&w, 2, |j| Ok([j.value().clone(), derivative(j.value(), DerivativeDirection::Dr)?]))?;
        a2 += slab.l2_sq(&z2, tilde)?;
        b2 += slab.l2_sq(&dz2, tilde)?;
        lhs = lhs.max(slab.sup(&w, region)?);
    }
    let (a, b) = (a2.sqrt(), b2.sqrt());
    let (c1, c2) = ks_weights(kind, tau as f64);
    let lhs_slots = Slots(vec![("sup".into(), lhs)]);
    let rhs_slots = Slots(vec![("z2_term".into(), c1 * a), ("dr_z2_term".into(), c2 * b)]);
    let name = match kind {
        KsRegion::R(_) => "ks_r",
        KsRegion::U(_) => "ks_u",
    };
    let mut report = EstimateReport::new(name, family_id, lhs_slots, rhs_slots, *source.grid());
    if let KsRegion::R(_) = kind {
        let product = c1 * a + (tau as f64).powf(-0.5) / kind.scale() * (a * b).sqrt();
        report.extras.push("product_rhs", product);
        report.extras.push("product_ratio", ratio(lhs, product).0);
    }
    Ok(report)
}

/// Roundoff estimate for `∂Z³w`: each `S` amplifies by `(t + r)/dr`, each
/// plain derivative by `1/dr`.
fn noise_floor(max_abs: f64, t_hi: f64, r_hi: f64, dr: f64) -> f64 {
    f64::EPSILON * max_abs * ((t_hi + r_hi) / dr).powi(3) * (2.0 / dr)
}

/// `‖∂w‖_{L∞L∞(C)}` against the `Box`-substituted bound, with the
/// intermediate splitting inequalities reported as extra ratios.
pub fn check_second_derivative_ks(
    w: &SpaceTimeField,
    tau: u64,
    kind: KsRegion,
    family_id: &str,
) -> Result<EstimateReport> {
    second_derivative_ks(&Source::field(w), tau, kind, family_id)
}

pub fn second_derivative_ks(source: &Source, tau: u64, kind: KsRegion, family_id: &str) -> Result<EstimateReport> {
    let region = kind.region(tau)?;
    let tilde = region.enlarged()?;
    let tf = tau as f64;
    let s = kind.scale();

    // squared L²L²(C̃) norms of: ∂Z^{≤3}, Box Z^{≤2}, (∂t−∂r)², (∂t+∂r)²,
    // ∂t²−∂r², (∂t∂r, ∂r²) and ∂ applied to Z^{≤2}
    let mut sq = [0.0f64; 7];
    let (mut lhs, mut max_w, mut max_dz3, mut t_hi, mut r_hi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for slab in slabs(source.grid(), &tilde, kind.span(), MARGIN)? {
        let w = (source.fetch)(slab.n.clone(), slab.j.clone())?;
        let [dz3] = word_sums(&w, 3, |j| Ok([gradient_abs(j.value())?]))?;
        let [dz2, boxz2, bad2, good2, wave2, drd2] = word_sums(&w, 2, |j| {
            let f = j.value();
            let ft = derivative(f, DerivativeDirection::Dt)?;
            let fr = derivative(f, DerivativeDirection::Dr)?;
            let ftt = derivative(&ft, DerivativeDirection::Dt)?;
            let frr = derivative(&fr, DerivativeDirection::Dr)?;
            let ftr = derivative(&fr, DerivativeDirection::Dt)?;
            let wave = ftt.zip_with(&frr, Parity::Unset, |a, b| a - b)?;
            let square = |sign: f64| -> Result<SpaceTimeField> {
                let m = ftt.zip_with(&frr, Parity::Unset, |a, b| a + b)?;
                m.zip_with(&ftr, Parity::Unset, |a, b| a + 2.0 * sign * b)
            };
            Ok([hypot(&ft, &fr)?, box_direct(f)?, square(-1.0)?, square(1.0)?, wave, hypot(&ftr, &frr)?])
        })?;
        for (acc, f) in sq.iter_mut().zip([&dz3, &boxz2, &bad2, &good2, &wave2, &drd2, &dz2]) {
            *acc += slab.l2_sq(f, tilde)?;
        }
        lhs = lhs.max(slab.sup(&gradient_abs(&w)?, region)?);
        let rows = slab.rows(&w)?;
        max_w = max_w.max(rows.max_abs());
        max_dz3 = max_dz3.max(slab.rows(&dz3)?.max_abs());
        t_hi = t_hi.max(w.t(w.nt() - 1));
        r_hi = r_hi.max(w.r(w.nr() - 1));
    }
    let [d3, bx, bad, good, wave, drd, d2] = sq.map(f64::sqrt);

    let (c_d3, c_box, name) = match kind {
        KsRegion::R(_) => (tf.powf(-0.5) * s.powf(-1.5), tf.powf(-0.5) * s.powf(-0.5), "crt"),
        KsRegion::U(_) => (s.powf(-0.5) * tf.powf(-1.5), s.powf(-0.5) * tf.powf(-0.5), "cut"),
    };
    let lhs_slots = Slots(vec![("grad_sup".into(), lhs)]);
    let rhs_slots = Slots(vec![("dz3_term".into(), c_d3 * d3), ("box_z2_term".into(), c_box * bx)]);
    let mut report = EstimateReport::new(name, family_id, lhs_slots, rhs_slots, *source.grid());

    let (minus_rhs, plus_rhs) = match kind {
        KsRegion::R(_) => (d3 / s + wave, d3 / s + wave),
        KsRegion::U(_) => (d3 / s + tf / s * wave, d3 / tf + wave),
    };
    let (c1, c2) = ks_weights(kind, tf);
    report.extras.push("first_step_ratio", ratio(lhs, c1 * d2 + c2 * drd).0);
    report.extras.push("minus_ratio", ratio(bad, minus_rhs).0);
    report.extras.push("plus_ratio", ratio(good, plus_rhs).0);
    report.extras.push("split_ratio", ratio(drd, bad + good + wave).0);

    let floor = noise_floor(max_w, t_hi, r_hi, source.grid().dr);
    report.extras.push("noise_floor", floor);
    if max_dz3 < NOISE_FACTOR * floor {
        report.flag(format!("third-order vector fields within {NOISE_FACTOR}x of the roundoff floor {floor:.3e}"));
    }
    Ok(report)
}

/// A traveling bump through `C_τ`, sampled on the registry grid at `dr`.
pub fn ks_traveling(tau: u64, kind: KsRegion, second: bool, dr: f64) -> Result<EstimateReport> {
    let id = format!("traveling({:?},tau={tau},scale={})", kind.track(), kind.scale());
    let grid = family_grid(dr, 2.5 * tau as f64)?;
    let source = Source::closed_form(grid, Parity::Even, traveling_bump(kind.track(), tau as f64, kind.scale()));
    if second {
        second_derivative_ks(&source, tau, kind, &id)
    } else {
        spacetime_ks(&source, tau, kind, &id)
    }
}

/// Homogeneous solver output from `u₀ = amplitude·bump`, recorded only on the
/// window around `C̃_τ`.
pub fn ks_solver(tau: u64, kind: KsRegion, second: bool, dr: f64, amplitude: f64) -> Result<EstimateReport> {
    let id = format!("solver(a={amplitude})");
    let grid = family_grid(dr, 2.5 * tau as f64)?;
    let tilde = kind.region(tau)?.enlarged()?;
    let all = slabs(&grid, &tilde, kind.span(), MARGIN)?;
    let n_a = all.iter().map(|s| s.n.start).min().unwrap_or(0);
    let j_a = all.iter().map(|s| s.j.start).min().unwrap_or(0);
    let j_b = all.iter().map(|s| s.j.end).max().unwrap_or(1) - 1;
    let window = RecordWindow { t_min: grid.t(n_a), r_min: grid.r(j_a), r_max: grid.r(j_b) };
    let config = SolveConfig::new(grid, Mode::Homogeneous).with_stride(1).with_window(window);
    let history = solve(&InitialData::u_only(Profile::bump(amplitude)), &config)?;
    let u = history.u()?;
    let source = Source::field(&u);
    if second {
        second_derivative_ks(&source, tau, kind, &id)
    } else {
        spacetime_ks(&source, tau, kind, &id)
    }
}

fn refined(at: impl Fn(f64) -> Result<EstimateReport>, dr: f64) -> Result<EstimateReport> {
    let coarse = at(dr)?;
    Ok(at(dr / 2.0)?.with_coarse(&coarse))
}

/// [`ks_traveling`] at `dr` and `dr/2`; the finer report carries the drift.
pub fn ks_traveling_refined(tau: u64, kind: KsRegion, second: bool, dr: f64) -> Result<EstimateReport> {
    refined(|dr| ks_traveling(tau, kind, second, dr), dr)
}

pub fn ks_solver_refined(tau: u64, kind: KsRegion, second: bool, dr: f64, amplitude: f64) -> Result<EstimateReport> {
    refined(|dr| ks_solver(tau, kind, second, dr, amplitude), dr)
}

//! The fixed test inputs the checks are run against, so reports from
//! different runs compare like with like.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fieldgrid::{GridSpec, Parity, SpaceTimeField};
use crate::regions::chi;
use crate::wavesolver::{solve, InitialData, Mode, Profile, SolveConfig};
use crate::{Error, Result};

/// Radial padding beyond the horizon on registry grids.
pub const PAD: f64 = 16.0;

/// Unit-height bump supported in `|x| < 1`.
pub fn unit_bump(x: f64) -> f64 {
    Profile::Bump { amplitude: 1.0, radius: 1.0, sharpness: 1.0 }.value(x)
}

/// Registry grid: `r_max = t_max + 16`, cfl 1/2.
pub fn family_grid(dr: f64, t_max: f64) -> Result<GridSpec> {
    GridSpec::for_horizon(dr, 0.5, t_max, PAD)
}

/// Conjugate inputs `W = r·u` on the full grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Zero,
    /// `P((r − t − 3)/2)` with `P` the polynomial bump: a free outgoing wave
    /// with `(∂t + ∂r)W = 0`.
    Outgoing,
    /// `r e^{−r²} cos t`: not a solution, so `Box u ≠ 0`.
    Standing,
    /// `P((t − 6 + r)/2) − P((t − 6 − r)/2)`: incoming, reflected at the origin.
    Reflecting,
    /// `r e^{−(r−t−3)²/2}`, cut off smoothly well beyond the pulse.
    Pulse,
    /// `r e^{−(r−t−3)²/2}·b₂(r)` with `b₂` the radius-2 data bump.
    Localized,
    /// Homogeneous solver output from `u₀ = amplitude·bump`, `u₁ = 0`.
    Solver { amplitude: f64 },
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Zero => f.write_str("zero"),
            Family::Outgoing => f.write_str("outgoing"),
            Family::Standing => f.write_str("standing"),
            Family::Reflecting => f.write_str("reflecting"),
            Family::Pulse => f.write_str("pulse"),
            Family::Localized => f.write_str("localized"),
            Family::Solver { amplitude } => write!(f, "solver(a={amplitude})"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// The display names; bare `solver` means amplitude 1.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "zero" => Family::Zero,
            "outgoing" => Family::Outgoing,
            "standing" => Family::Standing,
            "reflecting" => Family::Reflecting,
            "pulse" => Family::Pulse,
            "localized" => Family::Localized,
            "solver" => Family::Solver { amplitude: 1.0 },
            other => {
                let amplitude = other
                    .strip_prefix("solver(a=")
                    .and_then(|x| x.strip_suffix(')'))
                    .and_then(|x| x.parse::<f64>().ok())
                    .ok_or_else(|| Error::Parameter(format!("unknown family {other:?}")))?;
                Family::Solver { amplitude }
            }
        })
    }
}

impl Family {
    /// Families used by the batch checks.
    pub fn standard() -> Vec<Family> {
        vec![
            Family::Outgoing,
            Family::Standing,
            Family::Reflecting,
            Family::Pulse,
            Family::Localized,
            Family::Solver { amplitude: 1.0 },
        ]
    }

    /// Closed form of `W(t, r)`; `None` for solver output.
    pub fn exact(&self, grid: &GridSpec) -> Option<Box<dyn Fn(f64, f64) -> f64>> {
        let cut = grid.r_max - 6.0;
        Some(match *self {
            Family::Zero => Box::new(|_, _| 0.0),
            Family::Outgoing => Box::new(|t, r| poly_bump(0.5 * (r - t - 3.0))),
            Family::Standing => Box::new(|t, r| r * (-r * r).exp() * t.cos()),
            Family::Reflecting => Box::new(|t, r| poly_bump(0.5 * (t - 6.0 + r)) - poly_bump(0.5 * (t - 6.0 - r))),
            Family::Pulse => Box::new(move |t, r| {
                let s = r - t - 3.0;
                r * (-0.5 * s * s).exp() * (1.0 - chi(0.875 + (r - cut) / 16.0))
            }),
            Family::Localized => Box::new(|t, r| {
                let s = r - t - 3.0;
                r * (-0.5 * s * s).exp() * Profile::bump(1.0).value(r)
            }),
            Family::Solver { .. } => return None,
        })
    }

    /// `W` sampled on `grid` (odd parity).
    pub fn field(&self, grid: &GridSpec) -> Result<SpaceTimeField> {
        if let Family::Solver { amplitude } = *self {
            let data = InitialData::u_only(Profile::bump(amplitude));
            let history = solve(&data, &SolveConfig::new(*grid, Mode::Homogeneous).with_stride(1))?;
            return Ok(history.w_u);
        }
        let w = self.exact(grid).expect("closed form");
        Ok(SpaceTimeField::from_fn(*grid, Parity::Odd, w))
    }
}

/// `(1 − x²)⁸` on `|x| < 1`: C⁷ with tame derivatives, for checks that
/// difference a field four times.
pub fn poly_bump(x: f64) -> f64 {
    if x.abs() < 1.0 { (1.0 - x * x).powi(8) } else { 0.0 }
}

/// `(τ, scale)` of the traveling inputs for the space-time Sobolev checks.
pub const KS_CASES: [(u64, u64); 3] = [(16, 2), (32, 4), (64, 8)];
/// The `C^U_τ` second-derivative check needs `U ≥ 4` to stay out of the
/// difference-noise regime.
pub const CUT_CASES: [(u64, u64); 2] = [(32, 4), (64, 8)];
/// Annulus scales for the weighted Sobolev check.
pub const FRAME_SCALES: [u64; 7] = [1, 2, 4, 8, 16, 32, 64];

/// Which side of the cone a traveling bump rides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Track {
    /// Centered at `R + R(t − τ)/τ`, half-width `R/2`: crosses `C^R_τ`.
    R,
    /// Centered at `r = t − 1.5U`, half-width `U/2`: fills `C^U_τ`.
    U,
}

/// Traveling bump `u(t, r)` for the space-time Sobolev checks.
pub fn traveling_bump(track: Track, tau: f64, scale: f64) -> impl Fn(f64, f64) -> f64 {
    move |t, r| {
        let center = match track {
            Track::R => scale + scale * (t - tau) / tau,
            Track::U => t - 1.5 * scale,
        };
        poly_bump((r - center) / (scale / 2.0))
    }
}

/// Sampled traveling bump on a window (even parity).
pub fn traveling_field(
    grid: &GridSpec,
    n: Range<usize>,
    j: Range<usize>,
    track: Track,
    tau: f64,
    scale: f64,
) -> SpaceTimeField {
    SpaceTimeField::window_from_fn(*grid, n, j, Parity::Even, traveling_bump(track, tau, scale))
}

/// How a fixed-time bump family depends on the annulus scale R.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameFamily {
    /// Half-width 1, centered at `1.5R`.
    Translate,
    /// `h(r/R)`: half-width `R`, centered at `1.5R`. Agrees with
    /// `Translate` at R = 1.
    Dilate,
}

pub fn frame_bump(family: FrameFamily, big_r: f64) -> impl Fn(f64) -> f64 {
    let width = match family {
        FrameFamily::Translate => 1.0,
        FrameFamily::Dilate => big_r,
    };
    move |r| unit_bump((r - 1.5 * big_r) / width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgrid::{box_radial, derivative, DerivativeDirection};

    #[test]
    fn family_names_round_trip() {
        for fam in Family::standard().into_iter().chain([Family::Zero, Family::Solver { amplitude: 0.25 }]) {
            assert_eq!(fam.to_string().parse::<Family>().unwrap(), fam);
        }
        assert_eq!("solver".parse::<Family>().unwrap(), Family::Solver { amplitude: 1.0 });
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn unit_bump_support() {
        assert_eq!(unit_bump(1.0), 0.0);
        assert_eq!(unit_bump(-1.2), 0.0);
        assert!((unit_bump(0.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(unit_bump(0.3), unit_bump(-0.3));
    }

    #[test]
    fn families_are_odd_and_vanish_at_origin() {
        let g = family_grid(1.0 / 8.0, 8.0).unwrap();
        for fam in Family::standard() {
            let w = fam.field(&g).unwrap();
            assert_eq!(w.parity(), Parity::Odd);
            assert!(w.values().column(0).iter().all(|&v| v == 0.0), "{fam}");
            assert!(w.values().column(w.nr() - 1).iter().all(|&v| v.abs() < 1e-12), "{fam}");
        }
    }

    #[test]
    fn outgoing_is_annihilated_by_the_good_derivative() {
        // (∂t + ∂r)W and W_tt − W_rr are pure stencil error: check they
        // shrink at second order away from the one-sided time edges
        let residuals = |dr: f64| {
            let g = family_grid(dr, 8.0).unwrap();
            let w = Family::Outgoing.field(&g).unwrap();
            let inner = |f: &SpaceTimeField| f.window(4..g.nt() - 4, 0..g.nr()).unwrap().max_abs();
            let y = derivative(&w, DerivativeDirection::Good).unwrap();
            (inner(&y), inner(&box_radial(&w).unwrap()))
        };
        let (a, b) = (residuals(1.0 / 32.0), residuals(1.0 / 64.0));
        assert!((a.0 / b.0).log2() > 1.9 && (a.1 / b.1).log2() > 1.9, "{a:?} {b:?}");
    }

    #[test]
    fn traveling_bumps_ride_their_regions() {
        let f = traveling_bump(Track::R, 16.0, 2.0);
        assert!(f(16.0, 2.0) > 0.0 && f(32.0, 4.0) > 0.0);
        assert_eq!(f(16.0, 3.0), 0.0);
        let g = traveling_bump(Track::U, 32.0, 4.0);
        assert!(g(40.0, 34.0) > 0.0);
        assert_eq!(g(40.0, 36.0), 0.0);
        assert_eq!(g(40.0, 32.0), 0.0);
        assert!(frame_bump(FrameFamily::Dilate, 8.0)(19.0) > 0.0);
        assert_eq!(frame_bump(FrameFamily::Translate, 8.0)(13.0), 0.0);
        assert_eq!(frame_bump(FrameFamily::Translate, 1.0)(1.2), frame_bump(FrameFamily::Dilate, 1.0)(1.2));
    }
}

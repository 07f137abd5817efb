//! Weighted mixed Lebesgue norms over `[0, T] × ℝ³` for radial fields, with
//! `dx = 4π r² dr`, optionally restricted to a dyadic region.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::quadrature::{node_max, pl_integral};
use crate::fieldgrid::{derivative, DerivativeDirection, Parity, SpaceTimeField};
use crate::regions::{dyadic_annuli, is_dyadic, sigma_u, DyadicRegion};
use crate::{bracket, Error, Result};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Pointwise weight `⟨r⟩^a r^{−b} e^{−σ_U(t−r)}`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightSpec {
    pub power_r: f64,
    pub power_inv_r: f64,
    pub ghost: Option<u64>,
}

impl WeightSpec {
    pub fn bracket(a: f64) -> Self {
        Self { power_r: a, ..Self::default() }
    }

    pub fn over_r(self) -> Self {
        Self { power_inv_r: 1.0, ..self }
    }

    pub fn with_inv_r(self, b: f64) -> Self {
        Self { power_inv_r: b, ..self }
    }

    pub fn with_ghost(self, u: u64) -> Self {
        Self { ghost: Some(u), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if ![0.0, 0.5, 1.0].contains(&self.power_inv_r) {
            return Err(Error::Parameter(format!("r^-b needs b in {{0, 1/2, 1}}, got {}", self.power_inv_r)));
        }
        if let Some(u) = self.ghost {
            if !is_dyadic(u) {
                return Err(Error::Parameter(format!("ghost weight needs dyadic U, got {u}")));
            }
        }
        if !self.power_r.is_finite() {
            return Err(Error::Parameter("non-finite weight exponent".into()));
        }
        Ok(())
    }

    /// The weight without its `r^{−b}` factor.
    pub fn smooth_part(&self, t: f64, r: f64) -> f64 {
        let mut w = if self.power_r == 0.0 { 1.0 } else { bracket(r).powf(self.power_r) };
        if let Some(u) = self.ghost {
            w *= (-sigma_u(t - r, u as f64)).exp();
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lebesgue {
    L2,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    /// Norm in t.
    pub outer: Lebesgue,
    /// Norm in x.
    pub inner: Lebesgue,
    pub weight: WeightSpec,
    pub region: Option<DyadicRegion>,
}

impl MixedNormSpec {
    pub fn new(outer: Lebesgue, inner: Lebesgue, weight: WeightSpec) -> Self {
        Self { outer, inner, weight, region: None }
    }

    pub fn l2l2(weight: WeightSpec) -> Self {
        Self::new(Lebesgue::L2, Lebesgue::L2, weight)
    }

    pub fn linf_l2(weight: WeightSpec) -> Self {
        Self::new(Lebesgue::Linf, Lebesgue::L2, weight)
    }

    pub fn linf_linf(weight: WeightSpec) -> Self {
        Self::new(Lebesgue::Linf, Lebesgue::Linf, weight)
    }

    pub fn on(self, region: DyadicRegion) -> Self {
        Self { region: Some(region), ..self }
    }
}

/// `‖f‖` for the given spec over the field's whole time range.
pub fn mixed_norm(f: &SpaceTimeField, spec: &MixedNormSpec) -> Result<f64> {
    mixed_norm_until(f, spec, f64::INFINITY)
}

/// `‖f‖` with time truncated to `t ≤ horizon`.
pub fn mixed_norm_until(f: &SpaceTimeField, spec: &MixedNormSpec, horizon: f64) -> Result<f64> {
    spec.weight.validate()?;
    if spec.inner == Lebesgue::Linf && spec.weight.power_inv_r != 0.0 {
        return Err(Error::Parameter("sup norms take no r^-b factor".into()));
    }
    let (t_first, t_last) = (f.t(0), f.t(f.nt() - 1).min(horizon));
    let (ta, tb) = match spec.region.and_then(|q| q.time_bounds()) {
        Some((a, b)) => (a.max(t_first), b.min(t_last)),
        None => (t_first, t_last),
    };
    if tb < ta {
        return Err(Error::RegionOutsideGrid(format!(
            "time range [{ta}, {tb}] misses the field's [{t_first}, {t_last}]"
        )));
    }
    let dt = f.grid().dt;
    let dr = f.grid().dr;
    let r0 = f.r(0);
    let n_lo = (((ta - t_first) / dt) + 1e-9).floor() as usize;
    let n_hi = ((((tb - t_first) / dt) - 1e-9).ceil() as usize).min(f.nt() - 1).max(n_lo);
    let full = (r0, f.r(f.nr() - 1));
    let b = spec.weight.power_inv_r;

    let mut inner = Array1::zeros(n_hi - n_lo + 1);
    let mut g = Array1::zeros(f.nr());
    for n in n_lo..=n_hi {
        let t = f.t(n);
        let row = f.row(n);
        for j in 0..f.nr() {
            let r = f.r(j);
            let w = spec.weight.smooth_part(t, r) * row[j].abs();
            g[j] = match spec.inner {
                Lebesgue::L2 => FOUR_PI * w * w * if b == 1.0 { 1.0 } else { r.powf(2.0 - 2.0 * b) },
                Lebesgue::Linf => w,
            };
        }
        let intervals = match spec.region {
            Some(q) => q.r_intervals_at(t).as_slice().to_vec(),
            None => vec![full],
        };
        inner[n - n_lo] = match spec.inner {
            Lebesgue::L2 => intervals.iter().map(|&(a, b)| pl_integral(g.view(), r0, dr, a, b)).sum(),
            Lebesgue::Linf => {
                intervals.iter().filter_map(|&(a, b)| node_max(g.view(), r0, dr, a, b)).fold(0.0, f64::max)
            }
        };
    }
    let t0 = f.t(n_lo);
    let outer = match spec.outer {
        Lebesgue::L2 => pl_integral(inner.view(), t0, dt, ta, tb),
        Lebesgue::Linf => node_max(inner.view(), t0, dt, ta, tb).unwrap_or(0.0),
    };
    Ok(match spec.inner {
        Lebesgue::L2 => outer.max(0.0).sqrt(),
        Lebesgue::Linf => outer,
    })
}

/// `sup_R R^{−1/2} ‖w f‖_{L²L²(A_R)}` over dyadic annuli meeting the field.
pub fn le_norm_weighted(f: &SpaceTimeField, weight: WeightSpec, horizon: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for r in dyadic_annuli(f.r(f.nr() - 1)) {
        let spec = MixedNormSpec::l2l2(weight).on(DyadicRegion::annulus(r, 0)?);
        best = best.max(mixed_norm_until(f, &spec, horizon)? / (r as f64).sqrt());
    }
    Ok(best)
}

/// `‖f‖_LE = sup_R R^{−1/2} ‖f‖_{L²L²(A_R)}`.
pub fn le_norm(f: &SpaceTimeField) -> Result<f64> {
    le_norm_weighted(f, WeightSpec::default(), f64::INFINITY)
}

/// `‖(∂f, f/r)‖_LE` from `|f|` and `|∂t f| + |∂r f|`, taken pointwise as
/// `(r·grad + value)/r` so nothing is divided at the origin.
pub fn le1_from_parts(values_abs: &SpaceTimeField, grad_abs: &SpaceTimeField, horizon: f64) -> Result<f64> {
    let h = grad_abs
        .map_with_coords(Parity::Unset, |_, r, g| r * g.abs())
        .zip_with(values_abs, Parity::Unset, |rg, v| rg + v.abs())?;
    le_norm_weighted(&h, WeightSpec::default().over_r(), horizon)
}

/// `|∂t f| + |∂r f|` with the field's stencils.
pub fn gradient_abs(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let ft = derivative(f, DerivativeDirection::Dt)?;
    let fr = derivative(f, DerivativeDirection::Dr)?;
    ft.zip_with(&fr, Parity::Unset, |a, b| a.abs() + b.abs())
}

/// `‖f‖_{LE¹} = ‖(∂f, f/r)‖_LE`.
pub fn le1_norm(f: &SpaceTimeField) -> Result<f64> {
    le1_from_parts(&f.abs(), &gradient_abs(f)?, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgrid::GridSpec;
    use crate::regions::{chi, enumerate_regions};
    use proptest::prelude::*;

    fn grid(dr: f64) -> GridSpec {
        GridSpec::new(dr, 1.0, 20.0, 16.0).unwrap()
    }

    fn all_specs() -> Vec<MixedNormSpec> {
        let w = [
            WeightSpec::default(),
            WeightSpec::bracket(-0.3),
            WeightSpec::bracket(0.45).over_r(),
            WeightSpec::bracket(0.5).with_inv_r(0.5).with_ghost(4),
        ];
        let mut out = Vec::new();
        for w in w {
            out.push(MixedNormSpec::l2l2(w));
            out.push(MixedNormSpec::linf_l2(w));
            if w.power_inv_r == 0.0 {
                out.push(MixedNormSpec::linf_linf(w));
            }
        }
        out
    }

    fn smooth(g: GridSpec) -> SpaceTimeField {
        SpaceTimeField::from_fn(g, Parity::Even, |t, r| (-(r - 0.5 * t).powi(2) / 4.0).exp() * (1.0 + 0.1 * t))
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let z = SpaceTimeField::zeros(grid(0.25), Parity::Even);
        for s in all_specs() {
            assert_eq!(mixed_norm(&z, &s).unwrap(), 0.0);
        }
        assert_eq!(le_norm(&z).unwrap(), 0.0);
        assert_eq!(le1_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn homogeneity() {
        let f = smooth(grid(0.25));
        for s in all_specs() {
            let a = mixed_norm(&f, &s).unwrap();
            let b = mixed_norm(&f.scale(-3.5), &s).unwrap();
            assert!((b - 3.5 * a).abs() <= 1e-14 * b);
        }
    }

    #[test]
    fn mollified_unit_ball() {
        let g = GridSpec::new(1.0 / 64.0, 1.0, 8.0, 4.0).unwrap();
        let f = SpaceTimeField::from_fn(g, Parity::Even, |_, r| chi(15.0 / 16.0 + 2.0 * (1.0 - r)));
        let v = mixed_norm(&f, &MixedNormSpec::linf_l2(WeightSpec::default())).unwrap();
        let exact = (4.0 * std::f64::consts::PI / 3.0).sqrt();
        assert!((v / exact - 1.0).abs() < 0.02, "{v} vs {exact}");
    }

    #[test]
    fn le_of_annulus_indicator() {
        // one unit of time, f = 1 on A_1 with a thin smooth edge
        let g = GridSpec::new(1.0 / 64.0, 1.0, 8.0, 4.0).unwrap();
        let edge = 3f64.sqrt();
        let f = SpaceTimeField::from_fn(g, Parity::Even, |t, r| {
            let inside = chi(15.0 / 16.0 + 2.0 * (edge - r));
            if t <= 1.0 { inside } else { 0.0 }
        });
        let le = le_norm_weighted(&f, WeightSpec::default(), 1.0).unwrap();
        let volume = 4.0 * std::f64::consts::PI * edge.powi(3) / 3.0;
        assert!((le * le / volume - 1.0).abs() < 0.02, "{} vs {volume}", le * le);
    }

    #[test]
    fn refusals() {
        let f = smooth(grid(0.25));
        let bad = MixedNormSpec::l2l2(WeightSpec::default().with_inv_r(0.25));
        assert!(matches!(mixed_norm(&f, &bad), Err(Error::Parameter(_))));
        let bad = MixedNormSpec::linf_linf(WeightSpec::default().over_r());
        assert!(mixed_norm(&f, &bad).is_err());
        let bad = MixedNormSpec::l2l2(WeightSpec::default().with_ghost(3));
        assert!(mixed_norm(&f, &bad).is_err());
        let far = MixedNormSpec::l2l2(WeightSpec::default()).on(DyadicRegion::core(64, 0).unwrap());
        assert!(matches!(mixed_norm(&f, &far), Err(Error::RegionOutsideGrid(_))));
    }

    #[test]
    fn region_additivity() {
        let g = GridSpec::new(1.0 / 8.0, 1.0, 68.0, 64.0).unwrap();
        let f = SpaceTimeField::from_fn(g, Parity::Even, |t, r| (0.3 * r).cos() * (-(t - r) * (t - r) / 50.0).exp());
        for w in [WeightSpec::default(), WeightSpec::bracket(-0.2).over_r().with_ghost(2)] {
            for tau in [4u64, 8, 16, 32] {
                let slab = MixedNormSpec::l2l2(w).on(DyadicRegion::r_kind(tau, 1, 0).unwrap());
                let mut parts = 0.0;
                for q in enumerate_regions(tau, &g).unwrap() {
                    parts += mixed_norm(&f, &MixedNormSpec { region: Some(q), ..slab }).unwrap().powi(2);
                }
                // the slab [τ, 2τ] × [0, t + 2], written as a union R-kind region of all radii
                let mut whole = 0.0;
                let dt = g.dt;
                let inner: Vec<f64> = (0..g.nt())
                    .map(|n| {
                        let t = g.t(n);
                        let row = Array1::from_shape_fn(g.nr(), |j| {
                            let r = g.r(j);
                            let v = w.smooth_part(t, r) * f.get(n, j);
                            FOUR_PI * v * v * if w.power_inv_r == 1.0 { 1.0 } else { r * r }
                        });
                        pl_integral(row.view(), 0.0, g.dr, 0.0, t + 2.0)
                    })
                    .collect();
                whole += pl_integral(Array1::from(inner).view(), 0.0, dt, tau as f64, 2.0 * tau as f64);
                assert!((parts - whole).abs() <= 1e-11 * whole, "tau {tau}: {parts} vs {whole}");
            }
        }
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        let f = |g| SpaceTimeField::from_fn(g, Parity::Even, |t, r| (-(r - 1.0) * (r - 1.0)).exp() * (0.3 * t).cos());
        let spec = MixedNormSpec::l2l2(WeightSpec::bracket(-0.4).over_r().with_ghost(2))
            .on(DyadicRegion::u_kind(8, 2, 0).unwrap());
        let vals: Vec<f64> = [0.125, 0.0625, 0.03125].iter().map(|&h| mixed_norm(&f(grid(h)), &spec).unwrap()).collect();
        let order = ((vals[0] - vals[1]) / (vals[1] - vals[2])).abs().log2();
        assert!(order >= 1.9, "{order}");
    }

    #[test]
    fn le1_combines_gradient_and_quotient() {
        let g = GridSpec::new(1.0 / 16.0, 1.0, 12.0, 8.0).unwrap();
        let f = SpaceTimeField::from_fn(g, Parity::Even, |t, r| (-(r - t) * (r - t)).exp());
        let le1 = le1_norm(&f).unwrap();
        let le_grad = le_norm(&gradient_abs(&f).unwrap()).unwrap();
        assert!(le1 >= le_grad);
        let quotient = f.map_with_coords(Parity::Unset, |_, r, v| if r > 0.0 { v / r } else { 0.0 });
        assert!(le1 <= le_grad + le_norm(&quotient).unwrap() + 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn triangle_inequality(a in -2.0..2.0f64, b in -2.0..2.0f64, c in 0.1..3.0f64, k in 0usize..10) {
            let g = grid(0.5);
            let f = SpaceTimeField::from_fn(g, Parity::Even, |t, r| a * (c * r).sin() + t * 0.1);
            let h = SpaceTimeField::from_fn(g, Parity::Even, |t, r| b * (-(r - t).powi(2)).exp());
            let spec = all_specs()[k];
            let lhs = mixed_norm(&f.add(&h).unwrap(), &spec).unwrap();
            let rhs = mixed_norm(&f, &spec).unwrap() + mixed_norm(&h, &spec).unwrap();
            prop_assert!(lhs <= rhs + 1e-10);
        }

        #[test]
        fn le_is_monotone_in_support(k in 1usize..60) {
            let g = grid(0.25);
            let f = SpaceTimeField::from_fn(g, Parity::Even, |_, r| 1.0 + r.sin().abs());
            let cut = f.map_with_coords(Parity::Even, |_, r, v| if r <= k as f64 * 0.25 { v } else { 0.0 });
            prop_assert!(le_norm(&cut).unwrap() <= le_norm(&f).unwrap() + 1e-12);
        }
    }
}

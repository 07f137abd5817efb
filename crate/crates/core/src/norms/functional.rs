//! The iteration functionals `M_k` (size of an iterate) and `A_k` (size of
//! the step between iterates), each a sum of global weighted norms and
//! dyadic-region sup/ℓ² terms of `Z`-derivatives.
//!
//! Word sums are taken pointwise: every slot is the norm of
//! `Σ_{|μ|≤N} |·Z^μ f|`, which is comparable to `Σ_μ ‖·Z^μ f‖`.

use serde::ser::{SerializeMap, SerializeStruct};
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::mixed::{le1_from_parts, mixed_norm_until, MixedNormSpec, WeightSpec};
use crate::fieldgrid::{derivative, visit_z_words_multi, DerivativeDirection, Jet, Parity, SpaceTimeField, MAX_Z_ORDER};
use crate::regions::{dyadic_taus, DyadicRegion, RegionKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalParams {
    pub p: f64,
    pub delta: f64,
    /// Number of vector fields `N`; the region terms use `⌊N/2⌋`.
    pub n: usize,
    /// Norms are taken over `[0, min(horizon, t_end)]`.
    pub horizon: Option<f64>,
}

impl FunctionalParams {
    pub fn new(p: f64, delta: f64, n: usize) -> Result<Self> {
        let s = Self { p, delta, n, horizon: None };
        s.validate()?;
        Ok(s)
    }

    pub fn until(self, horizon: f64) -> Self {
        Self { horizon: Some(horizon), ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Parameter(format!("need 0 < p < 1, got {}", self.p)));
        }
        if !(self.delta > 0.0 && self.delta < self.p.min(1.0 - self.p)) {
            return Err(Error::Parameter(format!("need 0 < delta < min(p, 1 - p), got {}", self.delta)));
        }
        if self.n > MAX_Z_ORDER {
            return Err(Error::OrderTooHigh(self.n));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    M,
    A,
}

/// Names of the summands, in order.
pub const M_SLOTS: [&str; 12] = [
    "u_good_l2l2",
    "u_over_r_l2l2",
    "v_good_l2l2",
    "v_over_r_l2l2",
    "u_le1",
    "u_grad_linf_l2",
    "v_grad_l2l2",
    "v_grad_linf_l2",
    "u_r_sup",
    "v_r_l2sum",
    "u_u_sup",
    "v_u_l2sum",
];

/// `A_k` has no `L∞L²` slot for the `v` gradient.
pub const A_SLOTS: [&str; 11] = [
    "u_good_l2l2",
    "u_over_r_l2l2",
    "v_good_l2l2",
    "v_over_r_l2l2",
    "u_le1",
    "u_grad_linf_l2",
    "v_grad_l2l2",
    "u_r_sup",
    "v_r_l2sum",
    "u_u_sup",
    "v_u_l2sum",
];

/// Ordered name → value list, serialized as a JSON object in order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Slots(pub Vec<(String, f64)>);

impl Slots {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    pub fn push(&mut self, name: &str, v: f64) {
        self.0.push((name.to_string(), v));
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().map(|(_, v)| v).sum()
    }
}

impl Serialize for Slots {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for Slots {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Ordered;
        impl<'de> Visitor<'de> for Ordered {
            type Value = Slots;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map of slot names to numbers")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> std::result::Result<Slots, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = m.next_entry::<String, f64>()? {
                    out.push(entry);
                }
                Ok(Slots(out))
            }
        }
        d.deserialize_map(Ordered)
    }
}

/// One dyadic-region contribution to a sup or ℓ² slot, already weighted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionValue {
    pub slot: String,
    pub region: DyadicRegion,
    pub value: f64,
    /// The core region, which enters both the R-list and the U-list.
    pub core_shared: bool,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct NormBreakdown {
    pub kind: FunctionalKind,
    pub total: f64,
    pub slots: Slots,
    /// Reported but not summed: the other v-row region weight.
    pub extras: Slots,
    pub per_region: Vec<RegionValue>,
    pub truncation_t: f64,
    pub params: FunctionalParams,
}

impl NormBreakdown {
    pub fn slot(&self, name: &str) -> Option<f64> {
        self.slots.get(name)
    }
}

impl Serialize for NormBreakdown {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("NormBreakdown", 7)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("total", &self.total)?;
        st.serialize_field("slots", &self.slots)?;
        st.serialize_field("extras", &self.extras)?;
        st.serialize_field("truncation_t", &self.truncation_t)?;
        st.serialize_field("params", &self.params)?;
        st.serialize_field("per_region", &self.per_region)?;
        st.end()
    }
}

/// Pointwise word sums for one variable.
#[derive(Clone, Debug)]
pub struct Aggregates {
    /// `Σ_{|μ|≤N} |Z^μ f|`
    pub values: SpaceTimeField,
    /// `Σ_{|μ|≤N} |(∂t + ∂r) Z^μ f|`
    pub good: SpaceTimeField,
    /// `Σ_{|μ|≤N} (|∂t Z^μ f| + |∂r Z^μ f|)`
    pub grad: SpaceTimeField,
    /// As `grad` over `|μ| ≤ ⌊N/2⌋`.
    pub grad_low: SpaceTimeField,
}

impl Aggregates {
    fn zeros(like: &SpaceTimeField) -> Self {
        let z = like.map(Parity::Unset, |_| 0.0);
        Self { values: z.clone(), good: z.clone(), grad: z.clone(), grad_low: z }
    }

    fn add(&mut self, low: bool, f: &SpaceTimeField, ft: &SpaceTimeField, fr: &SpaceTimeField) {
        let add = |acc: &mut SpaceTimeField, g: &dyn Fn(usize, usize) -> f64| {
            for ((n, j), a) in acc.values_mut().indexed_iter_mut() {
                *a += g(n, j);
            }
        };
        let (f, ft, fr) = (f.values(), ft.values(), fr.values());
        add(&mut self.values, &|n, j| f[(n, j)].abs());
        add(&mut self.good, &|n, j| (ft[(n, j)] + fr[(n, j)]).abs());
        add(&mut self.grad, &|n, j| ft[(n, j)].abs() + fr[(n, j)].abs());
        if low {
            add(&mut self.grad_low, &|n, j| ft[(n, j)].abs() + fr[(n, j)].abs());
        }
    }
}

fn time_derivative(jet: &Jet) -> Result<SpaceTimeField> {
    match jet.levels().get(1) {
        Some(l) => Ok(l.clone()),
        None => derivative(jet.value(), DerivativeDirection::Dt),
    }
}

/// Word sums of `f` given as a time jet.
pub fn aggregate(jet: &Jet, n: usize) -> Result<Aggregates> {
    let mut acc = Aggregates::zeros(jet.value());
    visit_z_words_multi(std::slice::from_ref(jet), n, |word, js| {
        let f = js[0].value();
        acc.add(word.len() <= n / 2, f, &time_derivative(&js[0])?, &derivative(f, DerivativeDirection::Dr)?);
        Ok(())
    })?;
    Ok(acc)
}

/// Word sums of `a − b`, applying each `Z^μ` to `a` and `b` separately and
/// subtracting per word.
pub fn aggregate_difference(a: &Jet, b: &Jet, n: usize) -> Result<Aggregates> {
    a.value().check_same_window(b.value())?;
    let mut acc = Aggregates::zeros(a.value());
    visit_z_words_multi(&[a.clone(), b.clone()], n, |word, js| {
        let (fa, fb) = (js[0].value(), js[1].value());
        let f = fa.sub(fb)?;
        let ft = time_derivative(&js[0])?.sub(&time_derivative(&js[1])?)?;
        let fr = derivative(fa, DerivativeDirection::Dr)?.sub(&derivative(fb, DerivativeDirection::Dr)?)?;
        acc.add(word.len() <= n / 2, &f, &ft, &fr);
        Ok(())
    })?;
    Ok(acc)
}

/// Levelwise difference of two jets, truncated to the shallower one.
pub fn jet_difference(a: &Jet, b: &Jet) -> Result<Jet> {
    let levels = a.levels().iter().zip(b.levels()).map(|(x, y)| x.sub(y)).collect::<Result<Vec<_>>>()?;
    Jet::new(levels)
}

/// `M_k` for `u = u_k`, `v = v_k`.
pub fn m_functional(u: &Jet, v: &Jet, params: &FunctionalParams) -> Result<NormBreakdown> {
    params.validate()?;
    u.value().check_same_window(v.value())?;
    let au = aggregate(u, params.n)?;
    let av = aggregate(v, params.n)?;
    assemble(FunctionalKind::M, &au, &av, params)
}

/// `A_k` from consecutive iterates, differencing first and then taking norms.
pub fn a_functional(u: (&Jet, &Jet), v: (&Jet, &Jet), params: &FunctionalParams) -> Result<NormBreakdown> {
    params.validate()?;
    let du = jet_difference(u.0, u.1)?;
    let dv = jet_difference(v.0, v.1)?;
    du.value().check_same_window(dv.value())?;
    assemble(FunctionalKind::A, &aggregate(&du, params.n)?, &aggregate(&dv, params.n)?, params)
}

/// `A_k` recomputing every `Z^μ` on both iterates and subtracting per word.
pub fn a_functional_lockstep(u: (&Jet, &Jet), v: (&Jet, &Jet), params: &FunctionalParams) -> Result<NormBreakdown> {
    params.validate()?;
    let au = aggregate_difference(u.0, u.1, params.n)?;
    let av = aggregate_difference(v.0, v.1, params.n)?;
    au.values.check_same_window(&av.values)?;
    assemble(FunctionalKind::A, &au, &av, params)
}

/// Evaluate all slots of `M_k` or `A_k` from the aggregates.
pub fn assemble(kind: FunctionalKind, u: &Aggregates, v: &Aggregates, params: &FunctionalParams) -> Result<NormBreakdown> {
    params.validate()?;
    let f = &u.values;
    let t_end = f.t(f.nt() - 1);
    let horizon = params.horizon.unwrap_or(t_end).min(t_end);
    let (p, delta) = (params.p, params.delta);
    let l2 = |x: &SpaceTimeField, w: WeightSpec| mixed_norm_until(x, &MixedNormSpec::l2l2(w), horizon);
    let linf_l2 = |x: &SpaceTimeField, w: WeightSpec| mixed_norm_until(x, &MixedNormSpec::linf_l2(w), horizon);
    let good_w = WeightSpec::bracket((p - 1.0) / 2.0);

    let mut slots = Slots::default();
    slots.push("u_good_l2l2", l2(&u.good, good_w)?);
    slots.push("u_over_r_l2l2", l2(&u.values, good_w.over_r())?);
    slots.push("v_good_l2l2", l2(&v.good, good_w)?);
    slots.push("v_over_r_l2l2", l2(&v.values, good_w.over_r())?);
    slots.push("u_le1", le1_from_parts(&u.values, &u.grad, horizon)?);
    slots.push("u_grad_linf_l2", linf_l2(&u.grad, WeightSpec::default())?);
    slots.push("v_grad_l2l2", l2(&v.grad, WeightSpec::bracket(-(1.0 + delta) / 2.0))?);
    if kind == FunctionalKind::M {
        slots.push("v_grad_linf_l2", linf_l2(&v.grad, WeightSpec::bracket(-delta / 2.0))?);
    }

    let mut per_region = Vec::new();
    let (mut u_r, mut u_u) = (0.0_f64, 0.0_f64);
    let (mut v_r_m, mut v_r_a, mut v_u) = (0.0, 0.0, 0.0);
    let sup = |x: &SpaceTimeField, q: DyadicRegion| {
        mixed_norm_until(x, &MixedNormSpec::linf_linf(WeightSpec::default()).on(q), horizon)
    };
    for tau in dyadic_taus(horizon) {
        let tf = tau as f64;
        let regions = crate::regions::enumerate_regions(tau, f.grid())?;
        for q in regions {
            let core = q.kind == RegionKind::Core;
            let su = sup(&u.grad_low, q)?;
            let sv = sup(&v.grad_low, q)?;
            let s = q.scale();
            let mut record = |slot: &str, value: f64| {
                per_region.push(RegionValue { slot: slot.to_string(), region: q, value, core_shared: core })
            };
            if matches!(q.kind, RegionKind::R { .. } | RegionKind::Core) {
                let a = tf.sqrt() * s * su;
                let m_weight = tf.sqrt() * s.powf(1.0 - delta / 2.0) * sv;
                let a_weight = s.powf((3.0 - delta) / 2.0) * sv;
                u_r = u_r.max(a);
                v_r_m += m_weight * m_weight;
                v_r_a += a_weight * a_weight;
                record("u_r_sup", a);
                record("v_r_l2sum", if kind == FunctionalKind::M { m_weight } else { a_weight });
            }
            if matches!(q.kind, RegionKind::U { .. } | RegionKind::Core) {
                let a = tf * s.sqrt() * su;
                let b = tf.powf(1.0 - delta / 2.0) * s.sqrt() * sv;
                u_u = u_u.max(a);
                v_u += b * b;
                record("u_u_sup", a);
                record("v_u_l2sum", b);
            }
        }
    }
    let (v_r, v_r_alt) = match kind {
        FunctionalKind::M => (v_r_m.sqrt(), v_r_a.sqrt()),
        FunctionalKind::A => (v_r_a.sqrt(), v_r_m.sqrt()),
    };
    slots.push("u_r_sup", u_r);
    slots.push("v_r_l2sum", v_r);
    slots.push("u_u_sup", u_u);
    slots.push("v_u_l2sum", v_u.sqrt());
    let mut extras = Slots::default();
    extras.push("v_r_l2sum_alt", v_r_alt);

    Ok(NormBreakdown { kind, total: slots.sum(), slots, extras, per_region, truncation_t: horizon, params: *params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgrid::{apply_word, apply_z_multi_jet, GridSpec, ZWord};
    use crate::norms::le1_norm;

    fn grid() -> GridSpec {
        GridSpec::new(1.0 / 8.0, 1.0, 20.0, 16.0).unwrap()
    }

    /// Smooth even field with its exact time derivative.
    fn jet(a: f64, c: f64) -> Jet {
        let g = grid();
        let f = move |t: f64, r: f64| a * (-(r - t + c).powi(2)).exp() * (1.0 + r * r).recip();
        let ft = move |t: f64, r: f64| 2.0 * (r - t + c) * f(t, r);
        Jet::new(vec![
            SpaceTimeField::from_fn(g, Parity::Even, f),
            SpaceTimeField::from_fn(g, Parity::Even, ft),
        ])
        .unwrap()
    }

    fn params() -> FunctionalParams {
        FunctionalParams::new(0.9, 0.05, 2).unwrap()
    }

    #[test]
    fn parameter_domain() {
        assert!(FunctionalParams::new(1.0, 0.05, 2).is_err());
        assert!(FunctionalParams::new(0.9, 0.1, 2).is_err());
        assert!(FunctionalParams::new(0.5, 0.0, 2).is_err());
        assert!(matches!(FunctionalParams::new(0.5, 0.1, 4), Err(Error::OrderTooHigh(4))));
    }

    #[test]
    fn zero_histories_vanish_in_every_slot() {
        let z = jet(0.0, 0.0);
        let m = m_functional(&z, &z, &params()).unwrap();
        assert_eq!(m.slots.0.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(), M_SLOTS);
        assert!(m.slots.0.iter().all(|&(_, v)| v == 0.0));
        assert_eq!(m.total, 0.0);
        let a = a_functional((&z, &z), (&z, &z), &params()).unwrap();
        assert_eq!(a.slots.0.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(), A_SLOTS);
    }

    #[test]
    fn identical_iterates_give_zero_step() {
        let (u, v) = (jet(1.0, 2.0), jet(0.5, 1.0));
        let a = a_functional((&u, &u), (&v, &v), &params()).unwrap();
        assert_eq!(a.total, 0.0);
    }

    #[test]
    fn homogeneous_of_degree_one() {
        let m1 = m_functional(&jet(1.0, 2.0), &jet(0.5, 1.0), &params()).unwrap();
        let m2 = m_functional(&jet(2.0, 2.0), &jet(1.0, 1.0), &params()).unwrap();
        assert!((m2.total / m1.total - 2.0).abs() < 1e-12);
        assert!(m1.total > 0.0);
    }

    #[test]
    fn le1_slot_matches_independent_aggregate() {
        let (u, v) = (jet(1.0, 2.0), jet(0.5, 1.0));
        for n in 0..=2 {
            let p = FunctionalParams { n, ..params() };
            let m = m_functional(&u, &v, &p).unwrap();
            let words = apply_z_multi_jet(&u, n).unwrap();
            if n == 0 {
                let direct = le1_norm(u.value()).unwrap();
                // the jet's exact ∂t differs from the differenced one by O(dr²)
                assert!((m.slot("u_le1").unwrap() / direct - 1.0).abs() < 1e-2);
            }
            let mut values = u.value().map(Parity::Unset, |_| 0.0);
            let mut grad = values.clone();
            for (word, f) in &words {
                values = values.add(&f.abs()).unwrap();
                let mut w = ZWord(vec![DerivativeDirection::Dt]);
                w.0.extend(word.0.iter().copied());
                let ft = apply_word(&u, &w).unwrap().into_value();
                let fr = derivative(f, DerivativeDirection::Dr).unwrap();
                grad = grad.add(&ft.zip_with(&fr, Parity::Unset, |a, b| a.abs() + b.abs()).unwrap()).unwrap();
            }
            let direct = le1_from_parts(&values, &grad, f64::INFINITY).unwrap();
            let slot = m.slot("u_le1").unwrap();
            assert!((slot - direct).abs() <= 1e-10 * direct, "n {n}: {slot} vs {direct}");
        }
    }

    #[test]
    fn a_two_ways_agree() {
        let (u1, u0) = (jet(1.0, 2.0), jet(0.7, 2.5));
        let (v1, v0) = (jet(0.5, 1.0), jet(0.2, 0.0));
        for n in 0..=3 {
            let p = FunctionalParams { n, ..params() };
            let a = a_functional((&u1, &u0), (&v1, &v0), &p).unwrap();
            let b = a_functional_lockstep((&u1, &u0), (&v1, &v0), &p).unwrap();
            for ((k, x), (_, y)) in a.slots.0.iter().zip(&b.slots.0) {
                assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-300), "{k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn first_step_u_slots_equal_m_slots() {
        let (u, v, z) = (jet(1.0, 2.0), jet(0.5, 1.0), jet(0.0, 0.0));
        let m = m_functional(&u, &v, &params()).unwrap();
        let a = a_functional((&u, &z), (&v, &z), &params()).unwrap();
        for k in ["u_good_l2l2", "u_over_r_l2l2", "u_le1", "u_grad_linf_l2", "u_r_sup", "u_u_sup"] {
            assert_eq!(a.slot(k), m.slot(k), "{k}");
        }
    }

    #[test]
    fn breakdown_round_trips_through_json() {
        let m = m_functional(&jet(1.0, 2.0), &jet(0.5, 1.0), &params()).unwrap();
        let back: NormBreakdown = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.slots.0.iter().map(|p| p.0.as_str()).collect::<Vec<_>>(), M_SLOTS);
    }

    #[test]
    fn monotone_in_horizon() {
        let (u, v) = (jet(1.0, 2.0), jet(0.5, 1.0));
        let mut prev: Option<NormBreakdown> = None;
        for h in [4.0, 8.0, 11.0, 16.0] {
            let m = m_functional(&u, &v, &params().until(h)).unwrap();
            assert_eq!(m.truncation_t, h);
            if let Some(p) = prev {
                for ((k, x), (_, y)) in p.slots.0.iter().zip(&m.slots.0) {
                    assert!(y >= x, "{k} decreased: {x} -> {y}");
                }
            }
            prev = Some(m);
        }
    }

    #[test]
    fn region_terms_are_recorded_with_core_in_both_lists() {
        let m = m_functional(&jet(1.0, 2.0), &jet(0.5, 1.0), &params()).unwrap();
        // τ ∈ {4, 8}: R-list 1 + 2 regions plus cores, U-list likewise
        let cores = m.per_region.iter().filter(|r| r.core_shared).count();
        assert_eq!(cores, 2 * 4);
        let sup = m.per_region.iter().filter(|r| r.slot == "u_r_sup").map(|r| r.value).fold(0.0, f64::max);
        assert_eq!(sup, m.slot("u_r_sup").unwrap());
        let l2: f64 = m.per_region.iter().filter(|r| r.slot == "v_u_l2sum").map(|r| r.value * r.value).sum();
        assert!((l2.sqrt() - m.slot("v_u_l2sum").unwrap()).abs() < 1e-14);
        assert!(m.extras.get("v_r_l2sum_alt").unwrap() > 0.0);
    }

    #[test]
    fn json_keeps_slot_order() {
        let m = m_functional(&jet(1.0, 2.0), &jet(0.5, 1.0), &params()).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let pos: Vec<usize> = M_SLOTS.iter().map(|k| s.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }
}

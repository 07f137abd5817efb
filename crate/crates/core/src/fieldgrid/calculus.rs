use std::cmp::Ordering;
use std::fmt;

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::field::{Parity, SpaceTimeField};
use super::stencil::{self, LeftEdge};
use crate::{Error, Result};

/// Largest vector-field order the differencing supports reliably.
pub const MAX_Z_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DerivativeDirection {
    Dt,
    Dr,
    /// `∂t + ∂r`, tangent to outgoing cones.
    Good,
    /// `∂t − ∂r`.
    Bad,
    /// Scaling field `t∂t + r∂r`.
    S,
}

impl DerivativeDirection {
    /// The commuting fields `Z` on radial data, in word order.
    pub const Z: [DerivativeDirection; 3] = [Self::Dt, Self::Dr, Self::S];

    pub fn symbol(self) -> &'static str {
        match self {
            Self::Dt => "dt",
            Self::Dr => "dr",
            Self::Good => "dt+dr",
            Self::Bad => "dt-dr",
            Self::S => "S",
        }
    }

    fn result_parity(self, p: Parity) -> Parity {
        match self {
            Self::Dt | Self::S => p,
            Self::Dr => p.flip(),
            Self::Good | Self::Bad => Parity::Unset,
        }
    }
}

fn left_edge(f: &SpaceTimeField) -> LeftEdge {
    if f.touches_origin() { LeftEdge::Origin(f.parity()) } else { LeftEdge::Cut }
}

fn d_dt(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let v = stencil::d_dt(f.values(), f.grid().dt)?;
    Ok(f.like(v, f.parity()))
}

fn d_dr(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let v = stencil::d_dr(f.values(), f.grid().dr, left_edge(f))?;
    Ok(f.like(v, f.parity().flip()))
}

/// `t·a + r·b` pointwise.
fn scaling_combination(f: &SpaceTimeField, a: &SpaceTimeField, b: &SpaceTimeField, parity: Parity) -> SpaceTimeField {
    let mut out = a.values().to_owned();
    for (n, mut row) in out.rows_mut().into_iter().enumerate() {
        let t = f.t(n);
        let br = b.row(n);
        for (j, v) in row.iter_mut().enumerate() {
            *v = t * *v + f.r(j) * br[j];
        }
    }
    f.like(out, parity)
}

/// First-order derivative of a sampled field in direction `d`.
///
/// Centered in the interior, one-sided on the time edges, the outer radius
/// and window cuts; at r = 0 the field's parity supplies the ghost value.
pub fn derivative(f: &SpaceTimeField, d: DerivativeDirection) -> Result<SpaceTimeField> {
    stencil::check_size(f.nt(), f.nr())?;
    let out_parity = d.result_parity(f.parity());
    match d {
        DerivativeDirection::Dt => d_dt(f),
        DerivativeDirection::Dr => d_dr(f),
        DerivativeDirection::Good | DerivativeDirection::Bad => {
            let a = d_dt(f)?;
            let b = d_dr(f)?;
            let s = if d == DerivativeDirection::Good { 1.0 } else { -1.0 };
            a.zip_with(&b, out_parity, |x, y| x + s * y)
        }
        DerivativeDirection::S => {
            let a = d_dt(f)?;
            let b = d_dr(f)?;
            Ok(scaling_combination(f, &a, &b, out_parity))
        }
    }
}

pub fn second_derivative_t(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let v = stencil::d2_dt2(f.values(), f.grid().dt)?;
    Ok(f.like(v, f.parity()))
}

pub fn second_derivative_r(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let v = stencil::d2_dr2(f.values(), f.grid().dr, left_edge(f))?;
    Ok(f.like(v, f.parity()))
}

/// `(∂t² − ∂r²)W` for a conjugate field `W = r·u`. Dividing by r gives `Box u`.
pub fn box_radial(w: &SpaceTimeField) -> Result<SpaceTimeField> {
    if w.parity() != Parity::Odd {
        return Err(Error::ExpectedOddParity);
    }
    let tt = second_derivative_t(w)?;
    let rr = second_derivative_r(w)?;
    tt.zip_with(&rr, Parity::Odd, |a, b| a - b)
}

/// `f / r`; the r = 0 value (if present) is extrapolated from j = 1, 2, 3.
pub fn divide_by_r(f: &SpaceTimeField) -> Result<SpaceTimeField> {
    let (_, j0) = f.origin();
    let v = stencil::divide_by_r(f.values(), j0, f.grid().dr)?;
    Ok(f.like(v, f.parity().flip()))
}

/// `Box u = u_tt − u_rr − (2/r)u_r` for a radial (even) field, evaluated
/// directly. Meaningless at r = 0; callers stay away from the origin.
pub fn box_direct(u: &SpaceTimeField) -> Result<SpaceTimeField> {
    let tt = second_derivative_t(u)?;
    let rr = second_derivative_r(u)?;
    let r1 = d_dr(u)?;
    let mut out = tt.into_values();
    let dr = u.grid().dr;
    let (_, j0) = u.origin();
    Zip::indexed(&mut out).and(rr.values()).and(r1.values()).for_each(|(_, j), o, &b, &c| {
        let r = (j0 + j) as f64 * dr;
        *o = if r > 0.0 { *o - b - 2.0 * c / r } else { f64::NAN };
    });
    Ok(u.like(out, u.parity()))
}

/// Time jet `levels[k] = ∂t^k f` on a shared window.
///
/// Carrying the higher time derivatives explicitly lets callers supply them
/// from the equation instead of re-differencing stored samples; once the
/// supplied levels run out, `∂t` falls back to differencing.
#[derive(Clone, Debug)]
pub struct Jet {
    levels: Vec<SpaceTimeField>,
}

impl Jet {
    pub fn new(levels: Vec<SpaceTimeField>) -> Result<Self> {
        let first = levels.first().ok_or_else(|| Error::Parameter("empty jet".into()))?;
        for l in &levels[1..] {
            first.check_same_window(l)?;
        }
        Ok(Self { levels })
    }

    pub fn from_field(f: SpaceTimeField) -> Self {
        Self { levels: vec![f] }
    }

    pub fn value(&self) -> &SpaceTimeField {
        &self.levels[0]
    }

    pub fn into_value(mut self) -> SpaceTimeField {
        self.levels.swap_remove(0)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[SpaceTimeField] {
        &self.levels
    }

    fn dt(&self) -> Result<Jet> {
        if self.levels.len() > 1 {
            Ok(Jet { levels: self.levels[1..].to_vec() })
        } else {
            Ok(Jet { levels: vec![d_dt(&self.levels[0])?] })
        }
    }

    fn dr(&self) -> Result<Jet> {
        Ok(Jet { levels: self.levels.iter().map(d_dr).collect::<Result<_>>()? })
    }

    pub fn apply(&self, d: DerivativeDirection) -> Result<Jet> {
        stencil::check_size(self.levels[0].nt(), self.levels[0].nr())?;
        match d {
            DerivativeDirection::Dt => self.dt(),
            DerivativeDirection::Dr => self.dr(),
            DerivativeDirection::Good | DerivativeDirection::Bad => {
                let a = self.dt()?;
                let b = self.dr()?;
                let s = if d == DerivativeDirection::Good { 1.0 } else { -1.0 };
                let levels = a
                    .levels
                    .iter()
                    .zip(&b.levels)
                    .map(|(x, y)| x.zip_with(y, Parity::Unset, |p, q| p + s * q))
                    .collect::<Result<_>>()?;
                Ok(Jet { levels })
            }
            DerivativeDirection::S => {
                let parity = self.levels[0].parity();
                if self.levels.len() == 1 {
                    return Ok(Jet { levels: vec![derivative(&self.levels[0], d)?] });
                }
                // ∂t^k (t f_t + r f_r) = k f^(k) + t f^(k+1) + r ∂r f^(k)
                let mut levels = Vec::with_capacity(self.levels.len() - 1);
                for k in 0..self.levels.len() - 1 {
                    let fr = d_dr(&self.levels[k])?;
                    let mut s = scaling_combination(&self.levels[k], &self.levels[k + 1], &fr, parity);
                    if k > 0 {
                        s.add_scaled_assign(k as f64, &self.levels[k])?;
                        s = s.with_parity(parity);
                    }
                    levels.push(s);
                }
                Ok(Jet { levels })
            }
        }
    }
}

/// A composition `Z^μ` of vector fields; `[a, b]` means `a(b(f))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ZWord(pub Vec<DerivativeDirection>);

impl ZWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `d ∘ self`.
    pub fn prepend(&self, d: DerivativeDirection) -> ZWord {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(d);
        v.extend_from_slice(&self.0);
        ZWord(v)
    }

    /// All words over `{∂t, ∂r, S}` of length ≤ `n`, ordered by length then
    /// lexicographically with `∂t < ∂r < S`.
    pub fn all_up_to(n: usize) -> Vec<ZWord> {
        let mut out = vec![ZWord::default()];
        let mut layer = vec![ZWord::default()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(layer.len() * 3);
            for w in &layer {
                for d in DerivativeDirection::Z {
                    let mut v = w.0.clone();
                    v.push(d);
                    next.push(ZWord(v));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

impl Ord for ZWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ZWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ZWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<_> = self.0.iter().map(|d| d.symbol()).collect();
        f.write_str(&parts.join("."))
    }
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_Z_ORDER { Err(Error::OrderTooHigh(n)) } else { Ok(()) }
}

pub fn apply_word(jet: &Jet, word: &ZWord) -> Result<Jet> {
    check_order(word.len())?;
    let mut cur = jet.clone();
    for &d in word.0.iter().rev() {
        cur = cur.apply(d)?;
    }
    Ok(cur)
}

/// Every `Z^μ f` with `|μ| ≤ n`, tagged and in [`ZWord`] order.
pub fn apply_z_multi(f: &SpaceTimeField, n: usize) -> Result<Vec<(ZWord, SpaceTimeField)>> {
    apply_z_multi_jet(&Jet::from_field(f.clone()), n)
}

pub fn apply_z_multi_jet(jet: &Jet, n: usize) -> Result<Vec<(ZWord, SpaceTimeField)>> {
    let mut out = Vec::new();
    visit_z_words(jet, n, |w, j| {
        out.push((w.clone(), j.value().clone()));
        Ok(())
    })?;
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Depth-first walk over all `Z^μ`, `|μ| ≤ n`, sharing prefixes so each
/// composition costs one application. Only one root-to-leaf path of jets is
/// alive at a time.
pub fn visit_z_words(jet: &Jet, n: usize, mut visit: impl FnMut(&ZWord, &Jet) -> Result<()>) -> Result<()> {
    check_order(n)?;
    visit_z_words_multi(std::slice::from_ref(jet), n, |w, js| visit(w, &js[0]))
}

/// Lockstep walk over several jets on the same window.
pub fn visit_z_words_multi(
    jets: &[Jet],
    n: usize,
    mut visit: impl FnMut(&ZWord, &[Jet]) -> Result<()>,
) -> Result<()> {
    check_order(n)?;
    fn rec(
        word: &ZWord,
        jets: &[Jet],
        left: usize,
        visit: &mut dyn FnMut(&ZWord, &[Jet]) -> Result<()>,
    ) -> Result<()> {
        visit(word, jets)?;
        if left == 0 {
            return Ok(());
        }
        for d in DerivativeDirection::Z {
            let next: Vec<Jet> = jets.iter().map(|j| j.apply(d)).collect::<Result<_>>()?;
            rec(&word.prepend(d), &next, left - 1, visit)?;
        }
        Ok(())
    }
    rec(&ZWord::default(), jets, n, &mut visit)
}

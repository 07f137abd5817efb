use serde::Serialize;

use crate::fieldgrid::GridSpec;
use crate::norms::Slots;

/// Both sides of a multiplier identity, term by term.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub family_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Residual over the largest term magnitude (0 when every term is 0).
    pub relative_residual: f64,
    pub grid: GridSpec,
    /// `log2` of the residual ratio over a `dr → dr/2` pair.
    pub observed_order: Option<f64>,
    /// Named right-hand terms; their sum is `rhs`.
    pub terms: Slots,
    /// Every term that must be nonnegative is `≥ −SIGN_TOL`.
    pub signs_ok: bool,
}

/// Tolerance for terms that must be nonnegative.
pub const SIGN_TOL: f64 = 1e-12;

impl IdentityReport {
    pub(crate) fn new(name: &str, family_id: &str, lhs: f64, terms: Slots, grid: GridSpec, nonneg: &[&str]) -> Self {
        let rhs = terms.sum();
        let residual = (lhs - rhs).abs();
        let scale = terms.0.iter().map(|(_, v)| v.abs()).fold(lhs.abs(), f64::max);
        let relative_residual = if scale > 0.0 { residual / scale } else { 0.0 };
        let signs_ok = nonneg.iter().all(|n| terms.get(n).is_some_and(|v| v >= -SIGN_TOL));
        Self {
            name: name.into(),
            family_id: family_id.into(),
            lhs,
            rhs,
            residual,
            relative_residual,
            grid,
            observed_order: None,
            terms,
            signs_ok,
        }
    }

    /// This (finer) report with the order observed against `coarse`.
    pub fn with_coarse(mut self, coarse: &IdentityReport) -> Self {
        self.observed_order = observed_order(coarse.residual, self.residual);
        self
    }
}

/// `log2(e_coarse / e_fine)`, or `None` when either error is zero.
pub fn observed_order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

/// An inequality `LHS ≲ RHS` evaluated on one input.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub name: String,
    pub family_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Both sides vanish; `ratio` is reported as 0.
    pub zero_over_zero: bool,
    pub grid: GridSpec,
    /// `|ratio(dr) − ratio(dr/2)| / ratio(dr/2)` when a pair was supplied.
    pub refinement_drift: Option<f64>,
    pub lhs_slots: Slots,
    pub rhs_slots: Slots,
    /// Secondary ratios evaluated along the way.
    pub extras: Slots,
    pub flags: Vec<String>,
}

impl EstimateReport {
    pub(crate) fn new(name: &str, family_id: &str, lhs_slots: Slots, rhs_slots: Slots, grid: GridSpec) -> Self {
        Self::with_sides(name, family_id, lhs_slots.sum(), rhs_slots.sum(), lhs_slots, rhs_slots, grid)
    }

    pub(crate) fn with_sides(
        name: &str,
        family_id: &str,
        lhs: f64,
        rhs: f64,
        lhs_slots: Slots,
        rhs_slots: Slots,
        grid: GridSpec,
    ) -> Self {
        let (ratio, zero_over_zero) = ratio(lhs, rhs);
        Self {
            name: name.into(),
            family_id: family_id.into(),
            lhs,
            rhs,
            ratio,
            zero_over_zero,
            grid,
            refinement_drift: None,
            lhs_slots,
            rhs_slots,
            extras: Slots::default(),
            flags: Vec::new(),
        }
    }

    /// This (finer) report with the drift against `coarse`.
    pub fn with_coarse(mut self, coarse: &EstimateReport) -> Self {
        self.refinement_drift = Some(drift(coarse.ratio, self.ratio));
        self
    }

    pub(crate) fn flag(&mut self, msg: impl Into<String>) {
        self.flags.push(msg.into());
    }
}

/// `lhs/rhs` with `x/0 = ∞` for `x > 0` and `0/0 = 0` (flagged).
pub fn ratio(lhs: f64, rhs: f64) -> (f64, bool) {
    if rhs > 0.0 {
        (lhs / rhs, false)
    } else if lhs > 0.0 {
        (f64::INFINITY, false)
    } else {
        (0.0, true)
    }
}

pub fn drift(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        0.0
    } else if fine == 0.0 || !fine.is_finite() {
        f64::INFINITY
    } else {
        (coarse - fine).abs() / fine.abs()
    }
}

//! Weighted space-time norms of radial fields and the iteration functionals.

mod mixed;
pub mod quadrature;

pub use mixed::{
    gradient_abs, le1_from_parts, le1_norm, le_norm, le_norm_weighted, mixed_norm, mixed_norm_until, Lebesgue,
    MixedNormSpec, WeightSpec,
};
mod functional;

pub use functional::{
    a_functional, a_functional_lockstep, aggregate, aggregate_difference, assemble, jet_difference, m_functional,
    Aggregates, FunctionalKind, FunctionalParams, NormBreakdown, RegionValue, Slots, A_SLOTS, M_SLOTS,
};

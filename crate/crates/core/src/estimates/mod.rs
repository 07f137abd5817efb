//! Numerical checks of the multiplier identities (to discretization order)
//! and of the weighted estimates (as ratios over a fixed test registry).

mod energy;
mod identities;
mod ks;
pub mod registry;
mod report;
mod sobolev;

pub use energy::{
    check_hardy, check_le, check_mr, check_newle, forcing_sums, EnergyCheck, ForcingSums, Subject, SLAB,
};
pub use identities::{
    check_identity_minus, check_identity_minus_named, check_identity_plus, check_identity_plus_named,
    check_identity_refined, IdentityKind,
};
pub use registry::{Family, FrameFamily, Track, CUT_CASES, FRAME_SCALES, KS_CASES};
pub use report::{drift, observed_order, ratio, EstimateReport, IdentityReport, SIGN_TOL};
pub use ks::{
    check_second_derivative_ks, check_spacetime_ks, ks_solver, ks_solver_refined, ks_traveling, ks_traveling_refined,
    second_derivative_ks, spacetime_ks, KsRegion, Source, MARGIN,
};
pub use sobolev::{
    check_box_a, check_box_a_refined, check_scaling_identity, check_weighted_sobolev, weighted_sobolev_at, weighted_sobolev_refined,
};

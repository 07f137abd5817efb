//! Sampled space-time fields on a uniform radial grid and the
//! finite-difference calculus of the commuting vector fields.

mod calculus;
mod field;
mod grid;
pub mod io;
pub mod stencil;

pub use calculus::{
    apply_word, apply_z_multi, apply_z_multi_jet, box_direct, box_radial, derivative, divide_by_r,
    second_derivative_r, second_derivative_t, visit_z_words, visit_z_words_multi, DerivativeDirection, Jet,
    ZWord, MAX_Z_ORDER,
};
pub use field::{Parity, SpaceTimeField};
pub use grid::GridSpec;

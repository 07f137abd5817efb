//! Numerical laboratory for the radially symmetric reduction of the coupled
//! system
//!
//! ```text
//! Box u = ∂t u ∂t v − ∇u·∇v,      Box v = ∂t u ∂t v
//! ```
//!
//! in three space dimensions. The crate evolves the system in conjugate
//! variables `W = r u`, evaluates the weighted space-time norms that control
//! the Picard iteration, checks the multiplier identities and decay
//! estimates numerically, and drives the iteration itself.
//!
//! Layout:
//!
//! - [`fieldgrid`]: space-time grids, fields, stencils and the vector fields
//!   `∂t`, `∂r`, `S = t∂t + r∂r`.
//! - [`regions`]: dyadic regions `C^R_τ`, `C^U_τ`, their enlargements and the
//!   cutoffs `χ`, `β`, `σ_U`.
//! - [`norms`]: mixed norms, local energy norms and the iteration
//!   functionals `M_k`, `A_k`.
//! - [`wavesolver`]: method-of-lines RK4 solver and exact oracles.
//! - [`estimates`]: identity and inequality checks over a test registry.
//! - [`picard`]: the iteration driver, boundedness and decay fits.
//! - [`cli`]: the batch front-end.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod fieldgrid;
pub mod norms;
pub mod picard;
pub mod regions;
pub mod wavesolver;

pub use error::{Error, Result};

/// Japanese bracket `⟨x⟩ = sqrt(1 + x²)`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

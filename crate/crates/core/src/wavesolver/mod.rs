//! Evolution of the radial system in the conjugate variables `W = r·u`.

mod data;
pub mod dalembert;
mod history;
mod nonlinearity;
mod solver;

pub use dalembert::exact_dalembert;
pub use data::{derivative_sum, homogeneous_norm, multi_index_factor, InitialData, Profile, Taylor, DEFAULT_SHARPNESS};
pub use history::{SolutionHistory, StepDiagnostics};
pub use nonlinearity::{nonlinearity, q_u_null, q_u_raw, q_v, source, Equation, NullFormPath};
pub use solver::{
    solve, solve_from, solve_linear_forced, Forcing, Mode, RecordWindow, SolveConfig, State, BLOWUP_LEVEL, DEFAULT_CFL,
    MAX_CFL,
};

//! Independent references used to validate the solver and the backward pass.
//!
//! Nothing here calls into the code paths it checks: the MAXSAT enumerator has
//! its own bitmask clause evaluator, the dense adjoint solve builds the full
//! projected system with `nalgebra` from raw matrix entries, and the finite
//! difference driver treats the layer as a black box.

mod brute_force;
mod dense;
mod finite_diff;
pub mod gradcheck;

pub use brute_force::{brute_force_maxsat, MAX_BRUTE_FORCE_VARS};
pub use dense::{dense_backward_solve, projected_residual, projected_system, MAX_DENSE_DIM};
pub use finite_diff::{finite_difference, relative_error, DEFAULT_STEP};
pub use gradcheck::{run_gradcheck, BlockStats, GradcheckOptions, GradcheckReport};

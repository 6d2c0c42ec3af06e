//! A differentiable MAXSAT layer built on a low-rank semidefinite relaxation.
//!
//! - [`sdp`]: the relaxation, forward coordinate descent, and hyperplane rounding.
//! - [`layer`]: the layer itself, with input relaxation and the analytic backward pass.
//! - [`weights`]: the binary weight file format.
//! - [`train`]: losses, Adam, mini-batch epochs, and tied-weight chaining.
//! - [`tasks`]: parity and Sudoku datasets, encodings, and bit permutations.
//! - [`oracle`]: brute-force and dense references used to validate everything above.
//! - [`commands`]: the operations behind the `satnet` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod cnf;
pub mod commands;
pub mod config;
pub mod error;
pub mod layer;
pub mod linalg;
pub mod oracle;
pub mod sdp;
pub mod tasks;
pub mod train;
pub mod weights;

pub use cnf::CnfInstance;
pub use error::{Error, Result};
pub use layer::{ForwardContext, GradBundle, LayerConfig, LayerState, Sample, SatLayer};
pub use linalg::Matrix;
pub use sdp::{ClauseWeights, RoundingObjective, SolveOptions, SphereEmbedding};

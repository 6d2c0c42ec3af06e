//! Training stack: binary cross-entropy, Adam, mini-batch epochs, and
//! tied-weight chaining of one layer for the parity task.

pub mod adam;
pub mod chain;
pub mod epoch;
pub mod loss;
pub mod metrics;
pub mod objective;

pub use adam::{Adam, AdamConfig};
pub use chain::{chain_backward, chain_forward, ChainContext, ChainGrad, ChainMode, ChainSpec};
pub use epoch::{evaluate_dataset, train_epoch, EpochMetrics};
pub use loss::bce_loss;
pub use metrics::MetricsWriter;
pub use objective::{EvalMode, Evaluation, MaskedBits, Objective, ParityChain, Scoring};

//! Mini-batch epochs and dataset evaluation.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::adam::Adam;
use super::objective::{EvalMode, Evaluation, Objective};
use crate::error::{Error, Result};
use crate::layer::SatLayer;
use crate::linalg::Matrix;

/// Aggregates over one pass of a dataset.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpochMetrics {
    /// Mean per-example loss.
    pub loss: f64,
    /// Fraction of wrong bits over all supervised bits.
    pub bit_error: f64,
    /// Fraction of examples not entirely right.
    pub sample_error: f64,
    pub wall_seconds: f64,
}

#[derive(Default)]
struct Totals {
    loss: f64,
    bit_errors: f64,
    bits: usize,
    correct: f64,
    count: usize,
}

impl Totals {
    fn add(&mut self, e: &Evaluation) {
        self.loss += e.loss;
        self.bit_errors += e.bit_errors;
        self.bits += e.bits;
        self.correct += e.correct;
        self.count += 1;
    }

    fn finish(&self, start: Instant) -> EpochMetrics {
        let n = self.count.max(1) as f64;
        EpochMetrics {
            loss: self.loss / n,
            bit_error: if self.bits == 0 { 0.0 } else { self.bit_errors / self.bits as f64 },
            sample_error: 1.0 - self.correct / n,
            wall_seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// Visits the dataset once in a seed-determined order, taking one Adam step
/// per batch on the mean batch gradient. Metrics are those seen during the
/// pass (weights move between batches).
///
/// Examples within a batch are evaluated in parallel; their gradients are
/// summed in dataset order, so results do not depend on the thread count.
pub fn train_epoch<O: Objective>(
    examples: &[O::Example],
    layer: &mut SatLayer,
    opt: &mut Adam,
    objective: &O,
    batch_size: usize,
    seed: u64,
) -> Result<EpochMetrics> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let start = Instant::now();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut totals = Totals::default();
    let (rows, cols) = (layer.weights().matrix().rows(), layer.weights().matrix().cols());
    for batch in order.chunks(batch_size) {
        let frozen = &*layer;
        let evals: Vec<Evaluation> = batch
            .par_iter()
            .map(|&i| objective.evaluate(frozen, &examples[i], EvalMode::Probability, true))
            .collect::<Result<_>>()?;
        let mut grad = Matrix::zeros(rows, cols);
        for e in &evals {
            totals.add(e);
            grad.add_scaled(1.0, e.d_s.as_ref().expect("gradient requested"));
        }
        let scale = 1.0 / batch.len() as f64;
        for g in grad.as_mut_slice() {
            *g *= scale;
        }
        opt.step(layer.weights_mut().as_mut_slice(), grad.as_slice())?;
    }
    Ok(totals.finish(start))
}

/// Scores every example with fixed weights.
pub fn evaluate_dataset<O: Objective>(
    examples: &[O::Example],
    layer: &SatLayer,
    objective: &O,
    mode: EvalMode,
) -> Result<EpochMetrics> {
    if examples.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty dataset".into()));
    }
    let start = Instant::now();
    let evals: Vec<Evaluation> =
        examples.par_iter().map(|ex| objective.evaluate(layer, ex, mode, false)).collect::<Result<_>>()?;
    let mut totals = Totals::default();
    for e in &evals {
        totals.add(e);
    }
    Ok(totals.finish(start))
}

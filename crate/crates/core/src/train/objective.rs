//! What a training example means to the layer: how to run it, score it, and
//! differentiate its loss with respect to `S`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::layer::{Sample, SatLayer};
use crate::linalg::Matrix;
use crate::sdp::RoundingObjective;
use crate::tasks::parity::ParitySample;
use crate::tasks::permute::Permutation;

use super::chain::{chain_backward, chain_forward, ChainMode, ChainSpec};
use super::loss::bce_loss;

/// How outputs are turned into predictions when scoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Score the probabilities themselves: expected bit error and the
    /// probability that the whole sample is right.
    Probability,
    /// Threshold probabilities at 0.5.
    Threshold,
    /// Repeated hyperplane rounding, keeping the best of `N` samples.
    Round(usize),
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prob" => Ok(Self::Probability),
            "threshold" => Ok(Self::Threshold),
            _ => {
                let n = s
                    .strip_prefix("round:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown eval mode `{s}` (prob | threshold | round:N)")))?;
                Ok(Self::Round(n))
            }
        }
    }
}

/// Loss and accuracy of one example, plus `∂ℓ/∂S` when requested.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: f64,
    /// Number of wrong bits (expected number in probability mode).
    pub bit_errors: f64,
    pub bits: usize,
    /// 1 if the whole example is right (probability of that in probability mode).
    pub correct: f64,
    pub d_s: Option<Matrix>,
}

pub trait Objective: Sync {
    type Example: Sync;

    fn evaluate(&self, layer: &SatLayer, example: &Self::Example, mode: EvalMode, with_grad: bool) -> Result<Evaluation>;
}

/// How a [`MaskedBits`] example counts as solved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scoring {
    /// Every supervised bit thresholds to its target.
    Threshold,
    /// Supervised bits form one-hot groups (Sudoku cells); `cell_of[j]` is the
    /// group of bit `j`. Each group's argmax must hit the target's hot bit.
    OneHot(Arc<[usize]>),
}

impl Scoring {
    /// One-hot cells of a `B×B` board, optionally after a bit permutation.
    pub fn sudoku(size: usize, perm: Option<&Permutation>) -> Result<Self> {
        let cells: Vec<usize> = (0..size * size * size).map(|j| j / size).collect();
        let cells = match perm {
            Some(p) => p.apply(&cells)?,
            None => cells,
        };
        Ok(Self::OneHot(cells.into()))
    }
}

/// A single layer supervised on the unknown bits of each [`Sample`].
#[derive(Clone, Debug)]
pub struct MaskedBits {
    pub scoring: Scoring,
    pub round_seed: u64,
}

impl MaskedBits {
    pub fn new(scoring: Scoring) -> Self {
        Self { scoring, round_seed: 0 }
    }
}

fn bit_errors(pred: &[f64], y: &[f64], mode: EvalMode) -> f64 {
    pred.iter()
        .zip(y)
        .map(|(&p, &t)| match mode {
            EvalMode::Probability => (p - t).abs(),
            _ => ((p >= 0.5) as u8 as f64 - t).abs(),
        })
        .sum()
}

fn argmax(v: &[(f64, f64)], key: impl Fn(&(f64, f64)) -> f64) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if key(x) > key(&v[best]) {
            best = i;
        }
    }
    best
}

impl MaskedBits {
    fn correct(&self, idx: &[usize], pred: &[f64], y: &[f64], mode: EvalMode) -> f64 {
        let all_thresholded = || pred.iter().zip(y).all(|(&p, &t)| (p >= 0.5) == (t >= 0.5)) as u8 as f64;
        match (&self.scoring, mode) {
            (Scoring::Threshold, EvalMode::Probability) => pred.iter().zip(y).map(|(&p, &t)| 1.0 - (p - t).abs()).product(),
            (Scoring::Threshold, _) => all_thresholded(),
            // rounded bits have no useful argmax; require the exact pattern
            (Scoring::OneHot(_), EvalMode::Round(_)) => all_thresholded(),
            (Scoring::OneHot(cell_of), _) => {
                let mut groups: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
                for ((&j, &p), &t) in idx.iter().zip(pred).zip(y) {
                    groups.entry(cell_of[j]).or_default().push((p, t));
                }
                groups.values().all(|g| argmax(g, |x| x.0) == argmax(g, |x| x.1)) as u8 as f64
            }
        }
    }
}

impl Objective for MaskedBits {
    type Example = Sample;

    fn evaluate(&self, layer: &SatLayer, sample: &Sample, mode: EvalMode, with_grad: bool) -> Result<Evaluation> {
        let ctx = layer.forward_sample(sample)?;
        let idx: Vec<usize> = sample.targets.iter().map(|&(i, _)| i).collect();
        let pos: Vec<usize> = idx.iter().map(|i| ctx.outputs.binary_search(i).expect("targets are outputs")).collect();
        let z: Vec<f64> = pos.iter().map(|&p| ctx.z_out[p]).collect();
        let y: Vec<f64> = sample.targets.iter().map(|&(_, t)| t).collect();
        let (loss, dz) = bce_loss(&z, &y)?;

        let pred = match mode {
            EvalMode::Round(n) => {
                let rounded = layer.round_outputs(&ctx, n, self.round_seed, RoundingObjective::Relaxed)?;
                pos.iter().map(|&p| rounded[p]).collect()
            }
            _ => z,
        };
        let d_s = if with_grad {
            let mut d_z_out = vec![0.0; ctx.outputs.len()];
            for (&p, g) in pos.iter().zip(dz) {
                d_z_out[p] = g;
            }
            Some(layer.backward(&ctx, &d_z_out, None)?.d_s)
        } else {
            None
        };
        Ok(Evaluation {
            loss,
            bit_errors: bit_errors(&pred, &y, mode),
            bits: y.len(),
            correct: self.correct(&idx, &pred, &y, mode),
            d_s,
        })
    }
}

/// Parity through a tied-weight chain; only the final output is supervised.
#[derive(Clone, Copy, Debug)]
pub struct ParityChain {
    /// Hand-off used while training (evaluation always rounds between steps).
    pub train_mode: ChainMode,
}

impl Default for ParityChain {
    fn default() -> Self {
        Self { train_mode: ChainMode::Soft }
    }
}

impl Objective for ParityChain {
    type Example = ParitySample;

    fn evaluate(&self, layer: &SatLayer, ex: &ParitySample, mode: EvalMode, with_grad: bool) -> Result<Evaluation> {
        let chain_mode = match (with_grad, mode) {
            (true, _) | (_, EvalMode::Probability) => self.train_mode,
            _ => ChainMode::Hard,
        };
        let bits: Vec<f64> = ex.bits.iter().map(|&b| b as f64).collect();
        let spec = ChainSpec::new(bits.len(), chain_mode)?;
        let ctx = chain_forward(layer, &bits, &spec)?;
        let y = ex.parity as f64;
        let (loss, dz) = bce_loss(&[ctx.output], &[y])?;
        let pred = match mode {
            EvalMode::Round(n) => {
                let last = ctx.steps.last().expect("at least one step");
                let rounded = layer.round_outputs(last, n, 0, RoundingObjective::Relaxed)?;
                rounded[last.outputs.binary_search(&super::chain::OUT).expect("output solved")]
            }
            _ => ctx.output,
        };
        let d_s = if with_grad { Some(chain_backward(layer, &ctx, dz[0])?.d_s) } else { None };
        let err = bit_errors(&[pred], &[y], mode);
        Ok(Evaluation { loss, bit_errors: err, bits: 1, correct: 1.0 - err, d_s })
    }
}

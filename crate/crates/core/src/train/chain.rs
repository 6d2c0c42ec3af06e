//! One layer applied `L - 1` times with tied weights to compute parity.
//!
//! Every step uses the layer's variables as `[carry, bit, out, aux...]`:
//! step 0 reads bits 0 and 1, step `d` reads the previous step's output
//! and bit `d + 1`.

use crate::error::{Error, Result};
use crate::layer::{ForwardContext, SatLayer};
use crate::linalg::Matrix;

/// Variable indices inside each step's layer.
pub const CARRY: usize = 0;
pub const BIT: usize = 1;
pub const OUT: usize = 2;

/// How a step's output is handed to the next step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChainMode {
    /// Pass the probability itself.
    #[default]
    Soft,
    /// Pass the output rounded at 0.5; gradients pass straight through the rounding.
    Hard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    /// Input length `L`; the chain has `L - 1` steps.
    pub length: usize,
    pub mode: ChainMode,
}

impl ChainSpec {
    pub fn new(length: usize, mode: ChainMode) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidArgument(format!("chain length must be at least 2, got {length}")));
        }
        Ok(Self { length, mode })
    }

    pub fn steps(&self) -> usize {
        self.length - 1
    }
}

#[derive(Clone, Debug)]
pub struct ChainContext {
    pub spec: ChainSpec,
    pub steps: Vec<ForwardContext>,
    /// Probability produced by the last step.
    pub output: f64,
}

#[derive(Clone, Debug)]
pub struct ChainGrad {
    /// Sum of the per-step `∂ℓ/∂S`.
    pub d_s: Matrix,
    /// `∂ℓ/∂bit_d` for every input bit.
    pub d_bits: Vec<f64>,
}

fn check_layer(layer: &SatLayer) -> Result<()> {
    if layer.config().n_real != 3 {
        return Err(Error::Dimension(format!(
            "a chain step needs exactly 3 real variables (carry, bit, out), layer has {}",
            layer.config().n_real
        )));
    }
    Ok(())
}

pub fn chain_forward(layer: &SatLayer, bits: &[f64], spec: &ChainSpec) -> Result<ChainContext> {
    check_layer(layer)?;
    if bits.len() != spec.length {
        return Err(Error::Dimension(format!("{} bits for a chain of length {}", bits.len(), spec.length)));
    }
    let mut steps = Vec::with_capacity(spec.steps());
    let mut carry = bits[0];
    let mut output = 0.0;
    for d in 0..spec.steps() {
        let ctx = layer.forward(&[CARRY, BIT], &[carry, bits[d + 1]])?;
        output = ctx.z(OUT).expect("output variable is solved");
        carry = match spec.mode {
            ChainMode::Soft => output,
            ChainMode::Hard => {
                if output >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        steps.push(ctx);
    }
    Ok(ChainContext { spec: *spec, steps, output })
}

/// Backpropagates `d_output = ∂ℓ/∂output` from the last step to the first.
pub fn chain_backward(layer: &SatLayer, ctx: &ChainContext, d_output: f64) -> Result<ChainGrad> {
    let cfg = layer.config();
    let mut d_s = Matrix::zeros(cfg.m, cfg.n_vars() + 1);
    let mut d_bits = vec![0.0; ctx.spec.length];
    let mut d_carry = d_output;
    for (d, step) in ctx.steps.iter().enumerate().rev() {
        let mut d_z_out = vec![0.0; step.outputs.len()];
        let pos = step.outputs.binary_search(&OUT).expect("output variable is solved");
        d_z_out[pos] = d_carry;
        let g = layer.backward(step, &d_z_out, None)?;
        d_s.add_scaled(1.0, &g.d_s);
        d_bits[d + 1] = g.d_z_in[1];
        d_carry = g.d_z_in[0];
    }
    d_bits[0] = d_carry;
    Ok(ChainGrad { d_s, d_bits })
}

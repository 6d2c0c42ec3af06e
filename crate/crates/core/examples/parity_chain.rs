//! Parity of bit strings through one layer chained with tied weights.
//!
//!     cargo run --release --example parity_chain -- [length]

use std::ops::ControlFlow;

use satnet::commands::{fit, generate, GenTask};
use satnet::config::{preset, RunConfig};
use satnet::train::{chain_forward, ChainMode, ChainSpec};
use satnet::{LayerConfig, SatLayer};

fn main() -> satnet::Result<()> {
    let length: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let mut cfg = RunConfig::from_text(preset("parity").expect("bundled preset"))?;
    cfg.epochs = 10;

    let data = generate(GenTask::Parity { length }, 2200, cfg.data_seed)?;
    let (train, test) = data.split_at(2000);
    let layer = SatLayer::new(LayerConfig::new(3, cfg.n_aux, cfg.m)?.with_seed(cfg.seed))?;
    let out = fit(&cfg, &train, Some(&test), layer, None, |r| {
        let t = r.test.expect("test split");
        println!("epoch {:>2}  train loss {:.4}  test error {:.3}", r.epoch, r.train.loss, t.sample_error);
        if t.sample_error == 0.0 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;

    // the same weights apply to any length
    let bits = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
    let ctx = chain_forward(&out.best, &bits, &ChainSpec::new(bits.len(), ChainMode::Hard)?)?;
    let ones = bits.iter().filter(|&&b| b == 1.0).count();
    println!("20-bit string with {ones} ones -> {:.4}", ctx.output);
    Ok(())
}

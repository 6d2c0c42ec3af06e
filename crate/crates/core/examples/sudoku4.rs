//! Learn 4x4 Sudoku from one-hot boards, then solve a held-out puzzle.
//!
//!     cargo run --release --example sudoku4

use std::ops::ControlFlow;

use satnet::commands::{fit, generate, GenTask};
use satnet::config::{preset, RunConfig};
use satnet::tasks::{decode_bits, Dataset};
use satnet::{LayerConfig, SatLayer};

fn main() -> satnet::Result<()> {
    let mut cfg = RunConfig::from_text(preset("sudoku4").expect("bundled preset"))?;
    cfg.epochs = 2;
    let data = generate(GenTask::Sudoku { size: 4, permutation_seed: None }, 2100, cfg.data_seed)?;
    let (train, test) = data.split_at(2000);

    let layer = SatLayer::new(LayerConfig::new(64, cfg.n_aux, cfg.m)?.with_seed(cfg.seed))?;
    let out = fit(&cfg, &train, Some(&test), layer, None, |r| {
        let t = r.test.expect("test split");
        println!("epoch {}  train loss {:.4}  test board accuracy {:.3}", r.epoch, r.train.loss, 1.0 - t.sample_error);
        ControlFlow::Continue(())
    })?;

    let Dataset::Sudoku { samples, .. } = &test else { unreachable!() };
    let ex = &samples[0];
    let ctx = out.best.forward_sample(&ex.to_sample())?;
    let solved = decode_bits(4, &ctx.full_assignment(64))?;
    let given = decode_bits(4, &ex.puzzle.iter().map(|&b| b as f64).collect::<Vec<_>>())?;
    println!("puzzle:\n{}\nlayer:\n{}", given.to_text(), solved.to_text());
    let truth = decode_bits(4, &ex.solution.iter().map(|&b| b as f64).collect::<Vec<_>>())?;
    println!("matches solution: {}", solved == truth);
    Ok(())
}

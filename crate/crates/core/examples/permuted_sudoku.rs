//! The layer has no notion of board geometry, so scrambling the bit order
//! with a fixed permutation should not change how well it learns.
//!
//!     cargo run --release --example permuted_sudoku

use std::ops::ControlFlow;

use satnet::commands::{fit, generate, GenTask};
use satnet::config::{preset, RunConfig};
use satnet::{LayerConfig, SatLayer};

fn main() -> satnet::Result<()> {
    let mut cfg = RunConfig::from_text(preset("sudoku4").expect("bundled preset"))?;
    cfg.epochs = 1;
    for permutation_seed in [None, Some(2024)] {
        let data = generate(GenTask::Sudoku { size: 4, permutation_seed }, 2100, cfg.data_seed)?;
        let (train, test) = data.split_at(2000);
        let layer = SatLayer::new(LayerConfig::new(64, cfg.n_aux, cfg.m)?.with_seed(cfg.seed))?;
        let out = fit(&cfg, &train, Some(&test), layer, None, |_| ControlFlow::Continue(()))?;
        let acc = 1.0 - out.history.last().and_then(|r| r.test).expect("test split").sample_error;
        let label = match permutation_seed {
            Some(s) => format!("permuted (seed {s})"),
            None => "original".to_string(),
        };
        println!("{label:<20} board accuracy after {} epoch(s): {acc:.3}", cfg.epochs);
    }
    Ok(())
}

//! Learn XOR with a single layer: two inputs, one output, four auxiliary
//! variables.

use satnet::train::{evaluate_dataset, train_epoch, Adam, AdamConfig, EvalMode, MaskedBits, Scoring};
use satnet::{LayerConfig, Sample, SatLayer};

fn main() -> satnet::Result<()> {
    let table: Vec<Sample> = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(a, b)| Sample { known: vec![0, 1], z_known: vec![a as f64, b as f64], targets: vec![(2, (a ^ b) as f64)] })
        .collect();
    let mut layer = SatLayer::new(LayerConfig::new(3, 4, 8)?.with_seed(1))?;
    let mut adam = Adam::new(layer.weights().matrix().as_slice().len(), AdamConfig::with_lr(0.1));
    let objective = MaskedBits::new(Scoring::Threshold);

    for epoch in 0..300 {
        let m = train_epoch(&table, &mut layer, &mut adam, &objective, 4, epoch)?;
        if epoch % 50 == 0 {
            println!("epoch {epoch:>3}  loss {:.5}", m.loss);
        }
    }
    let m = evaluate_dataset(&table, &layer, &objective, EvalMode::Threshold)?;
    println!("final loss {:.5}, wrong rows {}", m.loss, (m.sample_error * 4.0).round());
    for s in &table {
        let ctx = layer.forward_sample(s)?;
        println!("{} xor {} -> {:.4}", s.z_known[0], s.z_known[1], ctx.z(2).unwrap_or(f64::NAN));
    }
    Ok(())
}

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satnet::train::{train_epoch, Adam, AdamConfig, MaskedBits, Scoring};
use satnet::{ClauseWeights, CnfInstance, LayerConfig, Matrix, Sample, SatLayer};

/// Random CNF with 1..=max_vars variables and 1..=max_clauses clauses of 1..=3 distinct literals.
pub fn random_cnf(rng: &mut ChaCha8Rng, max_vars: usize, max_clauses: usize) -> CnfInstance {
    let n = rng.random_range(2..=max_vars);
    let m = rng.random_range(1..=max_clauses);
    let clauses: Vec<Vec<i64>> = (0..m)
        .map(|_| {
            let len = rng.random_range(1..=3.min(n));
            let mut vars: Vec<i64> = (1..=n as i64).collect();
            for i in 0..len {
                let j = rng.random_range(i..vars.len());
                vars.swap(i, j);
            }
            vars[..len].iter().map(|&v| if rng.random_bool(0.5) { v } else { -v }).collect()
        })
        .collect();
    CnfInstance::from_literals(n, &clauses).unwrap()
}

/// Satisfied clauses, checked literal by literal.
pub fn count_by_literals(cnf: &CnfInstance, assignment: &[bool]) -> usize {
    cnf.clauses()
        .iter()
        .filter(|clause| {
            clause.iter().enumerate().any(|(i, &sign)| (sign > 0 && assignment[i]) || (sign < 0 && !assignment[i]))
        })
        .count()
}

pub fn random_weights(rng: &mut ChaCha8Rng, m: usize, n: usize) -> ClauseWeights {
    ClauseWeights::from_matrix(Matrix::from_fn(m, n + 1, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A 2-in/1-out layer (variables 0, 1 -> 2) trained on the XOR truth table.
pub fn xor_layer() -> SatLayer {
    let table: Vec<Sample> = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(a, b)| Sample { known: vec![0, 1], z_known: vec![a as f64, b as f64], targets: vec![(2, (a ^ b) as f64)] })
        .collect();
    let mut layer = SatLayer::new(LayerConfig::new(3, 4, 8).unwrap().with_seed(1)).unwrap();
    let mut adam = Adam::new(layer.weights().matrix().as_slice().len(), AdamConfig::with_lr(0.1));
    let obj = MaskedBits::new(Scoring::Threshold);
    for epoch in 0..300 {
        train_epoch(&table, &mut layer, &mut adam, &obj, 4, epoch).unwrap();
    }
    layer
}

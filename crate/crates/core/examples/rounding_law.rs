//! Empirical check of the rounding law: a random hyperplane puts `v` on the
//! side of `v_⊤` with probability `arccos(-vᵀv_⊤) / π`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use satnet::sdp::{probability_from_cosine, random_unit, round_with_hyperplane};
use satnet::{Matrix, SphereEmbedding};

fn main() -> satnet::Result<()> {
    let trials = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("{:>6} {:>9} {:>9} {:>9}", "cos", "law", "observed", "std err");
    for cos in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        // v_⊤ = e_1, v = (cos, sin, 0)
        let sin = f64::sqrt(1.0 - cos * cos);
        let v = SphereEmbedding::new(Matrix::from_col_major(3, 2, vec![1.0, 0.0, 0.0, cos, sin, 0.0]))?;
        let hits = (0..trials).filter(|_| round_with_hyperplane(&v, &random_unit(3, &mut rng))[0]).count();
        let p = probability_from_cosine(cos);
        let freq = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        println!("{cos:>6.2} {p:>9.5} {freq:>9.5} {se:>9.5}");
    }
    Ok(())
}

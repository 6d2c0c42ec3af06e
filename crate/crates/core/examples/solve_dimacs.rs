//! Solve a MAXSAT instance through the SDP relaxation and compare with the
//! exact optimum.
//!
//!     cargo run --example solve_dimacs -- [path/to/file.cnf]

use satnet::cnf::{maxsat_count, to_signs};
use satnet::oracle::brute_force_maxsat;
use satnet::sdp::{clause_matrix_from_cnf, coordinate_descent_forward, rank_for, randomized_round};
use satnet::{CnfInstance, RoundingObjective, SolveOptions, SphereEmbedding};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// unsatisfiable as a whole: x1 xor x2 plus both units; best is 5 of 6
const DEMO: &str = "c small demo
p cnf 3 6
1 2 0
-1 -2 0
1 0
2 0
-3 1 0
3 -2 0
";

fn main() -> satnet::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEMO.to_string(),
    };
    let cnf = CnfInstance::from_dimacs(&text)?;
    let s = clause_matrix_from_cnf(&cnf)?;
    let n = cnf.num_vars();

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let v0 = SphereEmbedding::random(rank_for(n), n, &mut rng);
    let outputs: Vec<usize> = (1..=n).collect();
    let solved = coordinate_descent_forward(v0, &s, &outputs, &SolveOptions { tol: 1e-6, max_sweeps: 1000 })?;
    println!("forward: {} sweeps, converged = {}", solved.sweeps, solved.converged);

    let best = randomized_round(&solved.embedding, &s, 32, 0, RoundingObjective::ClauseCount)?;
    let got = maxsat_count(&to_signs(&best.assignment), &cnf)?;
    println!("rounded: {got} of {} clauses, assignment {:?}", cnf.num_clauses(), best.assignment);

    if n <= 20 {
        let (opt, _) = brute_force_maxsat(&cnf)?;
        println!("optimum: {opt} of {}", cnf.num_clauses());
    }
    Ok(())
}

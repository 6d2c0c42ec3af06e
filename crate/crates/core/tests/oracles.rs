//! Cross-checks of the solver, backward pass, chaining and data generators
//! against independent references.

mod common;

use rand::Rng;

use satnet::cnf::{maxsat_count, to_signs};
use satnet::layer::{backward_coordinate_descent, grads_from_u};
use satnet::linalg::{dot, max_abs_diff};
use satnet::oracle::gradcheck::ABS_FLOOR;
use satnet::oracle::{
    brute_force_maxsat, dense_backward_solve, finite_difference, projected_residual, projected_system, relative_error,
    run_gradcheck, GradcheckOptions,
};
use satnet::sdp::{
    clause_matrix_from_cnf, compute_g, coordinate_descent_forward, probability_from_cosine, randomized_round, rank_for,
    rounding_score, sdp_objective,
};
use satnet::tasks::{gen_parity, gen_sudoku, Board};
use satnet::train::chain::{BIT, CARRY, OUT};
use satnet::train::{bce_loss, chain_backward, chain_forward, ChainMode, ChainSpec};
use satnet::{LayerConfig, Matrix, RoundingObjective, SatLayer, SolveOptions, SphereEmbedding};

use common::{count_by_literals, random_cnf, random_weights, rng, xor_layer};

fn all_assignments(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << n).map(move |bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
}

#[test]
fn clause_count_matches_literal_evaluator() {
    let mut r = rng(1);
    for _ in 0..30 {
        let cnf = random_cnf(&mut r, 3, 8);
        let s = clause_matrix_from_cnf(&cnf).unwrap();
        for a in all_assignments(cnf.num_vars()) {
            let want = count_by_literals(&cnf, &a);
            assert_eq!(rounding_score(&s, &a, RoundingObjective::ClauseCount) as usize, want);
            assert_eq!(maxsat_count(&to_signs(&a), &cnf).unwrap(), want);
        }
    }
}

#[test]
fn maxsat_count_matches_de_morgan() {
    let mut r = rng(2);
    for _ in 0..30 {
        let cnf = random_cnf(&mut r, 8, 15);
        let a: Vec<bool> = (0..cnf.num_vars()).map(|_| r.random_bool(0.5)).collect();
        // a clause is unsatisfied iff every literal in it is false
        let unsat = cnf
            .clauses()
            .iter()
            .filter(|c| c.iter().enumerate().all(|(i, &sg)| sg == 0 || (sg > 0) != a[i]))
            .count();
        assert_eq!(maxsat_count(&to_signs(&a), &cnf).unwrap(), cnf.num_clauses() - unsat);
    }
}

#[test]
fn objective_matches_double_loop() {
    let mut r = rng(3);
    let (n, m) = (4, 5);
    let s = random_weights(&mut r, m, n);
    let v = SphereEmbedding::random(rank_for(n), n, &mut r);
    let mut want = 0.0;
    for j in 0..m {
        for l in 0..v.rank() {
            let x: f64 = (0..=n).map(|i| s.matrix().get(j, i) * v.matrix().get(l, i)).sum();
            want += x * x;
        }
    }
    assert!((sdp_objective(&v, &s).unwrap() - want).abs() < 1e-12);
}

#[test]
fn g_matches_sum_over_other_columns() {
    let mut r = rng(4);
    let (n, m) = (5, 6);
    let s = random_weights(&mut r, m, n);
    let v = SphereEmbedding::random(rank_for(n), n, &mut r);
    for i in 1..=n {
        let mut want = vec![0.0; v.rank()];
        for j in (0..=n).filter(|&j| j != i) {
            let w: f64 = (0..m).map(|c| s.matrix().get(c, i) * s.matrix().get(c, j)).sum();
            for (o, x) in want.iter_mut().zip(v.column(j)) {
                *o += w * x;
            }
        }
        assert!(max_abs_diff(&compute_g(&v, &s, i).unwrap(), &want) < 1e-12);
    }
}

#[test]
fn objective_derivative_in_s_matches_contraction() {
    let mut r = rng(5);
    let (n, m) = (3, 4);
    let s = random_weights(&mut r, m, n);
    let v = SphereEmbedding::random(rank_for(n), n, &mut r);
    let vtv = Matrix::from_fn(n + 1, n + 1, |a, b| dot(v.column(a), v.column(b)));
    let num = finite_difference(
        |x| {
            let s = satnet::ClauseWeights::from_matrix(Matrix::from_col_major(m, n + 1, x.to_vec())).unwrap();
            sdp_objective(&v, &s).unwrap()
        },
        s.matrix().as_slice(),
        1e-5,
    )
    .unwrap();
    for i in 0..=n {
        for j in 0..m {
            let analytic: f64 = 2.0 * (0..=n).map(|b| s.matrix().get(j, b) * vtv.get(b, i)).sum::<f64>();
            assert!((num[i * m + j] - analytic).abs() < 1e-7);
        }
    }
}

#[test]
fn forward_beats_random_unit_assignments() {
    let mut r = rng(6);
    for _ in 0..10 {
        let n = r.random_range(1..=6);
        let m = r.random_range(1..=8);
        let s = random_weights(&mut r, m, n);
        let v0 = SphereEmbedding::random(rank_for(n), n, &mut r);
        let outputs: Vec<usize> = (1..=n).collect();
        let solved = coordinate_descent_forward(v0, &s, &outputs, &SolveOptions { tol: 1e-8, max_sweeps: 10_000 }).unwrap();
        let best_random = (0..1000)
            .map(|_| sdp_objective(&SphereEmbedding::random(rank_for(n), n, &mut r), &s).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(sdp_objective(&solved.embedding, &s).unwrap() <= best_random + 1e-9);
    }
}

#[test]
fn rounding_reaches_optimum_on_small_cnf() {
    let cnf = satnet::CnfInstance::from_literals(2, &[vec![1, 2], vec![-1], vec![-2, 1]]).unwrap();
    let best = all_assignments(2).map(|a| count_by_literals(&cnf, &a)).max().unwrap();
    let s = clause_matrix_from_cnf(&cnf).unwrap();
    let v0 = SphereEmbedding::random(rank_for(2), 2, &mut rng(7));
    let solved = coordinate_descent_forward(v0, &s, &[1, 2], &SolveOptions { tol: 1e-8, max_sweeps: 1000 }).unwrap();
    let round = randomized_round(&solved.embedding, &s, 16, 0, RoundingObjective::ClauseCount).unwrap();
    assert_eq!(count_by_literals(&cnf, &round.assignment), best);
}

#[test]
fn brute_force_dominates_random_search() {
    let mut r = rng(8);
    for _ in 0..5 {
        let cnf = random_cnf(&mut r, 10, 20);
        let (opt, witness) = brute_force_maxsat(&cnf).unwrap();
        assert_eq!(count_by_literals(&cnf, &witness), opt);
        let sampled = (0..1000)
            .map(|_| {
                let a: Vec<bool> = (0..cnf.num_vars()).map(|_| r.random_bool(0.5)).collect();
                count_by_literals(&cnf, &a)
            })
            .max()
            .unwrap();
        assert!(opt >= sampled);
    }
}

#[test]
fn probability_slope_along_truth() {
    for c in [-0.8, -0.3, 0.0, 0.4, 0.9] {
        let h = 1e-6;
        let num = (probability_from_cosine(c + h) - probability_from_cosine(c - h)) / (2.0 * h);
        let z = probability_from_cosine(c);
        let want = 1.0 / (std::f64::consts::PI * (std::f64::consts::PI * z).sin());
        assert!((num - want).abs() < 1e-5, "cos {c}: {num} vs {want}");
    }
}

struct BackwardCase {
    v: SphereEmbedding,
    s: satnet::ClauseWeights,
    outputs: Vec<usize>,
    g_norms: Vec<f64>,
    d_v: Matrix,
}

/// Random instance whose first `k - 2` variables are held fixed as inputs.
/// With every variable free, rotations about `v_⊤` leave the objective
/// unchanged and the adjoint system is singular.
fn backward_case(seed: u64, n: usize, m: usize) -> Option<BackwardCase> {
    let mut r = rng(seed);
    let s = random_weights(&mut r, m, n);
    let v0 = SphereEmbedding::random(rank_for(n), n, &mut r);
    let outputs: Vec<usize> = (rank_for(n) - 1..=n).collect();
    let fwd = coordinate_descent_forward(v0, &s, &outputs, &SolveOptions { tol: 1e-12, max_sweeps: 100_000 }).unwrap();
    if !fwd.converged || fwd.g_norms.iter().any(|&g| g <= 1e-6) {
        return None;
    }
    let d_v = Matrix::from_fn(fwd.embedding.rank(), outputs.len(), |_, _| r.random_range(-1.0..1.0));
    Some(BackwardCase { v: fwd.embedding, s, outputs, g_norms: fwd.g_norms, d_v })
}

fn output_block(u: &Matrix, outputs: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(u.rows(), outputs.len());
    for (p, &o) in outputs.iter().enumerate() {
        out.col_mut(p).copy_from_slice(u.col(o));
    }
    out
}

#[test]
fn backward_matches_dense_pseudoinverse_on_tiny_instance() {
    let case = (0..).find_map(|seed| backward_case(seed, 3, 2)).unwrap();
    assert_eq!((case.v.rank(), case.outputs.len()), (3, 2));
    let opts = SolveOptions { tol: 1e-13, max_sweeps: 100_000 };
    let back = backward_coordinate_descent(&case.d_v, &case.v, &case.s, &case.outputs, &case.g_norms, &opts).unwrap();
    let dense = dense_backward_solve(&case.d_v, &case.v, &case.s, &case.outputs, &case.g_norms).unwrap();
    let u_o = output_block(&back.u, &case.outputs);
    assert!(max_abs_diff(u_o.as_slice(), dense.as_slice()) < 1e-6);
}

#[test]
fn backward_residual_and_projection() {
    let mut checked = 0;
    for seed in 100..200 {
        let Some(case) = backward_case(seed, 5, 4) else { continue };
        let opts = SolveOptions { tol: 1e-13, max_sweeps: 100_000 };
        let back = backward_coordinate_descent(&case.d_v, &case.v, &case.s, &case.outputs, &case.g_norms, &opts).unwrap();
        if !back.converged {
            continue;
        }
        let u_o = output_block(&back.u, &case.outputs);
        let res = projected_residual(&u_o, &case.d_v, &case.v, &case.s, &case.outputs, &case.g_norms).unwrap();
        assert!(res < 1e-6, "seed {seed}: residual {res}");
        let dense = dense_backward_solve(&case.d_v, &case.v, &case.s, &case.outputs, &case.g_norms).unwrap();
        for (p, &o) in case.outputs.iter().enumerate() {
            assert!(dot(dense.col(p), case.v.column(o)).abs() < 1e-9);
        }
        checked += 1;
        if checked == 10 {
            break;
        }
    }
    assert_eq!(checked, 10);
}

#[test]
fn dense_system_is_symmetric() {
    let case = (0..).find_map(|seed| backward_case(seed, 4, 3)).unwrap();
    let sys = projected_system(&case.v, &case.s, &case.outputs, &case.g_norms).unwrap();
    assert!((&sys - sys.transpose()).amax() < 1e-12);
}

#[test]
fn input_gradient_matches_naive_contraction() {
    let mut r = rng(9);
    let (n, m) = (4, 3);
    let s = random_weights(&mut r, m, n);
    let v = SphereEmbedding::random(rank_for(n), n, &mut r);
    let k = v.rank();
    let mut u = Matrix::from_fn(k, n + 1, |_, _| r.random_range(-1.0..1.0));
    for l in 0..k {
        u.set(l, 0, 0.0);
    }
    let known = [1, 3];
    let (d_v_in, _) = grads_from_u(&u, &v, &s, &known).unwrap();
    for (c, &i) in known.iter().enumerate() {
        for l in 0..k {
            let mut want = 0.0;
            for j in 0..m {
                for b in 0..=n {
                    want -= u.get(l, b) * s.matrix().get(j, b) * s.matrix().get(j, i);
                }
            }
            assert!((d_v_in.get(l, c) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn layer_gradients_match_finite_differences() {
    let opts = GradcheckOptions { instances: 8, max_real: 6, max_clauses: 6, seed: 11, ..Default::default() };
    let report = run_gradcheck(&opts).unwrap();
    assert!(report.passed(), "{report}");
}

#[test]
fn xor_layer_reproduces_truth_table() {
    let layer = xor_layer();
    for (a, b) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
        let z = layer.forward(&[0, 1], &[a as f64, b as f64]).unwrap().z(2).unwrap();
        assert!((z - (a ^ b) as f64).abs() < 0.1, "{a} xor {b} gave {z}");
    }
}

#[test]
fn threshold_and_single_rounding_agree_when_confident() {
    let layer = xor_layer();
    let (mut agree, mut total) = (0, 0);
    for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        let ctx = layer.forward(&[0, 1], &[a, b]).unwrap();
        for seed in 0..500 {
            let rounded = layer.round_outputs(&ctx, 1, seed, RoundingObjective::Relaxed).unwrap();
            for (p, &z) in ctx.z_out.iter().enumerate() {
                if (z - 0.5).abs() > 0.45 {
                    total += 1;
                    agree += ((z >= 0.5) == (rounded[p] == 1.0)) as usize;
                }
            }
        }
    }
    assert!(total > 0);
    assert!(agree as f64 / total as f64 > 0.95);
}

#[test]
fn xor_chain_computes_parity() {
    let layer = xor_layer();
    let spec = ChainSpec::new(4, ChainMode::Hard).unwrap();
    for bits in 0u8..16 {
        let x: Vec<f64> = (0..4).map(|i| (bits >> i & 1) as f64).collect();
        let out = chain_forward(&layer, &x, &spec).unwrap().output;
        assert_eq!(out >= 0.5, bits.count_ones() % 2 == 1, "bits {bits:04b} gave {out}");
    }
    let zeros = chain_forward(&layer, &[0.0; 4], &spec).unwrap().output;
    assert!(zeros < 0.5);
}

/// Small soft chain solved with a fixed sweep count, so the loss is smooth in `S`.
fn chain_layer() -> SatLayer {
    let mut layer = SatLayer::new(LayerConfig::new(3, 1, 3).unwrap().with_seed(5)).unwrap();
    layer.set_solver(0.0, 3000);
    layer
}

fn chain_loss(layer: &SatLayer, bits: &[f64]) -> f64 {
    let spec = ChainSpec::new(bits.len(), ChainMode::Soft).unwrap();
    let out = chain_forward(layer, bits, &spec).unwrap().output;
    bce_loss(&[out], &[1.0]).unwrap().0
}

fn analytic_chain(layer: &SatLayer, bits: &[f64]) -> (Matrix, Vec<f64>) {
    let spec = ChainSpec::new(bits.len(), ChainMode::Soft).unwrap();
    let ctx = chain_forward(layer, bits, &spec).unwrap();
    let (_, dz) = bce_loss(&[ctx.output], &[1.0]).unwrap();
    let g = chain_backward(layer, &ctx, dz[0]).unwrap();
    (g.d_s, g.d_bits)
}

#[test]
fn chain_weight_gradient_matches_finite_differences() {
    let layer = chain_layer();
    let bits = [0.9, 0.2, 0.7];
    let (d_s, _) = analytic_chain(&layer, &bits);
    let mut probe = layer.clone();
    let num = finite_difference(
        |x| {
            probe.weights_mut().as_mut_slice().copy_from_slice(x);
            chain_loss(&probe, &bits)
        },
        layer.weights().matrix().as_slice(),
        1e-5,
    )
    .unwrap();
    for (a, n) in d_s.as_slice().iter().zip(&num) {
        assert!(relative_error(*a, *n, ABS_FLOOR) < 1e-3, "analytic {a} numeric {n}");
    }
}

#[test]
fn tied_gradient_is_sum_of_per_step_copies() {
    let layer = chain_layer();
    let bits = [0.9, 0.2, 0.7, 0.4];
    let (d_s, _) = analytic_chain(&layer, &bits);
    let steps = bits.len() - 1;
    let base = layer.weights().matrix().as_slice().to_vec();

    // untied forward: step d uses its own copy of S
    let untied_loss = |copies: &[Vec<f64>]| {
        let mut carry = bits[0];
        for (d, w) in copies.iter().enumerate() {
            let mut l = layer.clone();
            l.weights_mut().as_mut_slice().copy_from_slice(w);
            carry = l.forward(&[CARRY, BIT], &[carry, bits[d + 1]]).unwrap().z(OUT).unwrap();
        }
        bce_loss(&[carry], &[1.0]).unwrap().0
    };
    let mut summed = vec![0.0; base.len()];
    for d in 0..steps {
        let num = finite_difference(
            |x| {
                let mut copies = vec![base.clone(); steps];
                copies[d] = x.to_vec();
                untied_loss(&copies)
            },
            &base,
            1e-5,
        )
        .unwrap();
        for (s, n) in summed.iter_mut().zip(num) {
            *s += n;
        }
    }
    for (a, n) in d_s.as_slice().iter().zip(&summed) {
        assert!(relative_error(*a, *n, ABS_FLOOR) < 1e-3, "tied {a} per-step sum {n}");
    }
}

#[test]
fn interior_bit_gradient_matches_finite_differences() {
    let layer = chain_layer();
    let bits = [0.9, 0.2, 0.7, 0.4];
    let (_, d_bits) = analytic_chain(&layer, &bits);
    let num = finite_difference(|x| chain_loss(&layer, x), &bits, 1e-5).unwrap();
    for (i, (a, n)) in d_bits.iter().zip(&num).enumerate() {
        assert!(relative_error(*a, *n, ABS_FLOOR) < 1e-3, "bit {i}: analytic {a} numeric {n}");
    }
}

#[test]
fn parity_labels_agree_with_fold() {
    for s in gen_parity(17, 500, 3).unwrap() {
        assert_eq!(s.parity, s.bits.iter().fold(0, |acc, b| acc ^ b));
    }
}

/// Plain backtracking completion counter, stopping at `limit`.
fn completions(cells: &mut [u8], size: usize, limit: usize) -> usize {
    let Some(pos) = cells.iter().position(|&c| c == 0) else { return 1 };
    let (r, c) = (pos / size, pos % size);
    let b = (size as f64).sqrt() as usize;
    let mut found = 0;
    for d in 1..=size as u8 {
        let clash = (0..size).any(|i| {
            cells[r * size + i] == d
                || cells[i * size + c] == d
                || cells[(r / b * b + i / b) * size + c / b * b + i % b] == d
        });
        if !clash {
            cells[pos] = d;
            found += completions(cells, size, limit - found);
            cells[pos] = 0;
            if found >= limit {
                break;
            }
        }
    }
    found
}

#[test]
fn generated_puzzles_have_unique_completions() {
    for sample in gen_sudoku(4, 100, 21).unwrap() {
        let bits: Vec<f64> = sample.puzzle.iter().map(|&b| b as f64).collect();
        let puzzle: Board = satnet::tasks::decode_bits(4, &bits).unwrap();
        let mut cells = puzzle.cells().to_vec();
        assert_eq!(completions(&mut cells, 4, 2), 1);
    }
    for sample in gen_sudoku(9, 3, 22).unwrap() {
        let bits: Vec<f64> = sample.puzzle.iter().map(|&b| b as f64).collect();
        let mut cells = satnet::tasks::decode_bits(9, &bits).unwrap().cells().to_vec();
        assert_eq!(completions(&mut cells, 9, 2), 1);
    }
}

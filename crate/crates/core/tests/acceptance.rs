//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs under `cargo test`. The 9x9 smoke run takes hours on one core and
//! is skipped unless `--ignored`/`--include-ignored` is passed or
//! `SATNET_ACCEPTANCE_FULL=1` is set. A positional argument filters criteria
//! by name.

mod common;

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use satnet::cnf::{maxsat_count, to_signs};
use satnet::commands::{fit, load_run_data, TrainOutcome};
use satnet::config::{preset, RunConfig};
use satnet::layer::{backward_coordinate_descent, grad_output_relaxation, random_inputs};
use satnet::linalg::max_abs_diff;
use satnet::oracle::{brute_force_maxsat, dense_backward_solve, projected_residual, projected_system, GradcheckOptions};
use satnet::sdp::{
    clause_matrix_from_cnf, coordinate_descent_forward, probability_from_cosine, random_unit, randomized_round, rank_for,
    round_with_hyperplane, sdp_objective, ForwardSolver,
};
use satnet::{LayerConfig, Matrix, RoundingObjective, SatLayer, SolveOptions, SphereEmbedding};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed.as_secs_f64() < limit_s as f64
}

// 1
fn gradient_fidelity() -> Verdict {
    let start = Instant::now();
    let report = satnet::commands::cmd_gradcheck(&GradcheckOptions::default()).expect("gradcheck runs");
    let t = start.elapsed();
    verdict(
        report.passed() && within(t, 120),
        format!(
            "dS {:.4} within 1e-3 (worst {:.2e}), dz_in {:.4} (worst {:.2e}), {} redraws, {:.1}s",
            report.d_s.fraction(),
            report.d_s.worst,
            report.d_z_in.fraction(),
            report.d_z_in.worst,
            report.rejected,
            t.as_secs_f64()
        ),
    )
}

/// True when the tangent-projected right-hand side has no component in the
/// null space of the dense system. Flat optima (e.g. one clause whose
/// relaxation reaches zero) violate this and no finite solution exists.
fn consistent(sys: &nalgebra::DMatrix<f64>, d_v: &Matrix, v: &SphereEmbedding, cols: &[usize]) -> bool {
    let mut rhs = d_v.clone();
    for (a, &c) in cols.iter().enumerate() {
        let vo = v.matrix().col(c);
        let d: f64 = vo.iter().zip(rhs.col(a)).map(|(x, y)| x * y).sum();
        for (r, x) in rhs.col_mut(a).iter_mut().enumerate() {
            *x -= d * vo[r];
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let eig = sys.clone().symmetric_eigen();
    let cutoff = 1e-9 * eig.eigenvalues.amax();
    let leak: f64 = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i].abs() < cutoff)
        .map(|i| eig.eigenvectors.column(i).dot(&rhs).powi(2))
        .sum();
    leak.sqrt() <= 1e-9 * rhs.norm().max(1e-300)
}

// 2
fn backward_vs_dense() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_diff, mut worst_res, mut done, mut draws, mut singular) = (0.0f64, 0.0f64, 0, 0, 0);
    while done < 20 && draws < 10_000 {
        draws += 1;
        let n_real = rng.random_range(2..=8);
        let cfg = LayerConfig::new(n_real, rng.random_range(0..=4), rng.random_range(1..=8))
            .unwrap()
            .with_seed(rng.random())
            .with_solver(1e-12, 100_000);
        let layer = SatLayer::new(cfg.clone()).unwrap();
        // Fewer than k-2 known inputs leaves a rotation about v_top free and the system singular.
        let min_known = rank_for(cfg.n_vars()).saturating_sub(2).max(1);
        if min_known >= n_real {
            continue;
        }
        let (known, z) = random_inputs(&cfg, rng.random_range(min_known..n_real), 0.05, 0.95, &mut rng);
        let ctx = layer.forward(&known, &z).unwrap();
        if !ctx.converged || ctx.g_norms.iter().any(|&g| g <= 1e-6) {
            continue;
        }
        let cols: Vec<usize> = ctx.outputs.iter().map(|&o| o + 1).collect();
        let s = layer.weights();
        let d_z: Vec<f64> = ctx.outputs.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let d_v = grad_output_relaxation(&d_z, &ctx.z_out, &layer.state().v_top, cfg.prob_clamp);
        if !consistent(&projected_system(&ctx.embedding, s, &cols, &ctx.g_norms).unwrap(), &d_v, &ctx.embedding, &cols) {
            singular += 1;
            continue;
        }
        let opts = SolveOptions { tol: 1e-13, max_sweeps: 1_000_000 };
        let back = backward_coordinate_descent(&d_v, &ctx.embedding, s, &cols, &ctx.g_norms, &opts).unwrap();
        let mut u_o = Matrix::zeros(d_v.rows(), cols.len());
        for (p, &c) in cols.iter().enumerate() {
            u_o.col_mut(p).copy_from_slice(back.u.col(c));
        }
        let dense = dense_backward_solve(&d_v, &ctx.embedding, s, &cols, &ctx.g_norms).unwrap();
        worst_diff = worst_diff.max(max_abs_diff(u_o.as_slice(), dense.as_slice()));
        worst_res = worst_res.max(projected_residual(&u_o, &d_v, &ctx.embedding, s, &cols, &ctx.g_norms).unwrap());
        done += 1;
    }
    let t = start.elapsed();
    verdict(
        done == 20 && worst_diff < 1e-6 && worst_res < 1e-6 && within(t, 60),
        format!(
            "{done} instances ({singular} singular draws skipped), max |U - U_dense| {worst_diff:.2e}, max residual {worst_res:.2e}, {:.1}s",
            t.as_secs_f64()
        ),
    )
}

// 3
fn monotone_descent() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::NEG_INFINITY;
    let mut updates = 0usize;
    for _ in 0..100 {
        let n = rng.random_range(1..=30);
        let m = rng.random_range(1..=30);
        let s = common::random_weights(&mut rng, m, n);
        let v = SphereEmbedding::random(rank_for(n), n, &mut rng);
        let mut solver = ForwardSolver::new(v, &s).unwrap();
        let mut prev = sdp_objective(solver.embedding(), &s).unwrap();
        for _ in 0..40 {
            let mut change = 0.0f64;
            for i in 1..=n {
                change = change.max(solver.update(i));
                let now = sdp_objective(solver.embedding(), &s).unwrap();
                worst = worst.max(now - prev);
                prev = now;
                updates += 1;
            }
            if change < 1e-4 {
                break;
            }
        }
    }
    verdict(worst <= 1e-9, format!("{updates} coordinate updates over 100 solves, largest increase {worst:.2e}"))
}

// 4
fn rounding_law() -> Verdict {
    let trials = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut pass = true;
    let mut parts = Vec::new();
    for cos in [-0.9, 0.0, 0.9] {
        let sin = f64::sqrt(1.0 - cos * cos);
        let v = SphereEmbedding::new(Matrix::from_col_major(3, 2, vec![1.0, 0.0, 0.0, cos, sin, 0.0])).unwrap();
        let hits = (0..trials).filter(|_| round_with_hyperplane(&v, &random_unit(3, &mut rng))[0]).count();
        let p = probability_from_cosine(cos);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let z = (hits as f64 / trials as f64 - p) / se;
        pass &= z.abs() <= 3.0;
        parts.push(format!("cos {cos:+.1}: {:.4} vs {p:.4} ({z:+.2} se)", hits as f64 / trials as f64));
    }
    verdict(pass, parts.join(", "))
}

// 5
fn solver_quality() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut optimal, mut worst_ratio) = (0, 1.0f64);
    for i in 0..50u64 {
        let cnf = common::random_cnf(&mut rng, 12, 20);
        let (opt, _) = brute_force_maxsat(&cnf).unwrap();
        let s = clause_matrix_from_cnf(&cnf).unwrap();
        let n = cnf.num_vars();
        let v = SphereEmbedding::random(rank_for(n), n, &mut ChaCha8Rng::seed_from_u64(i));
        let outputs: Vec<usize> = (1..=n).collect();
        let fwd = coordinate_descent_forward(v, &s, &outputs, &SolveOptions::default()).unwrap();
        let r = randomized_round(&fwd.embedding, &s, 32, i, RoundingObjective::ClauseCount).unwrap();
        let got = maxsat_count(&to_signs(&r.assignment), &cnf).unwrap();
        optimal += (got == opt) as usize;
        if opt > 0 {
            worst_ratio = worst_ratio.min(got as f64 / opt as f64);
        }
    }
    let t = start.elapsed();
    verdict(
        optimal >= 40 && worst_ratio >= 0.9 && within(t, 300),
        format!("optimal on {optimal}/50, worst ratio {worst_ratio:.3}, {:.1}s", t.as_secs_f64()),
    )
}

fn preset_config(name: &str) -> RunConfig {
    RunConfig::from_text(preset(name).expect("bundled preset")).expect("preset validates")
}

/// Trains a preset until `done(test sample error)` holds or the epoch budget runs out.
fn train_until(cfg: &RunConfig, done: impl Fn(f64) -> bool) -> (TrainOutcome, Duration) {
    let start = Instant::now();
    let (train, test) = load_run_data(cfg).expect("data");
    let layer_cfg = LayerConfig::new(cfg.n_real(), cfg.n_aux, cfg.m)
        .unwrap()
        .with_seed(cfg.seed)
        .with_solver(cfg.tol, cfg.max_sweeps);
    let layer = SatLayer::new(layer_cfg).unwrap();
    let out = fit(cfg, &train, test.as_ref(), layer, None, |r| {
        let err = r.test.expect("test split").sample_error;
        if done(err) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .expect("training runs");
    (out, start.elapsed())
}

fn test_errors(out: &TrainOutcome) -> Vec<f64> {
    out.history.iter().map(|r| r.test.expect("test split").sample_error).collect()
}

// 6
fn parity() -> Verdict {
    let cfg = preset_config("parity");
    let (out, t) = train_until(&cfg, |err| err == 0.0);
    let errs = test_errors(&out);
    let hit = errs.iter().position(|&e| e == 0.0);
    verdict(
        hit.is_some() && within(t, 3600),
        format!(
            "L={} lr={}: test error {} ({} epochs run, {:.1}s)",
            match cfg.task {
                satnet::config::TaskKind::Parity { length } => length,
                _ => 0,
            },
            cfg.lr,
            match hit {
                Some(e) => format!("reached 0 at epoch {}", e + 1),
                None => format!("never reached 0, last {:.4}", errs.last().unwrap()),
            },
            errs.len(),
            t.as_secs_f64()
        ),
    )
}

// 7 and 9 share the unpermuted run
fn sudoku4() -> (Verdict, usize, f64) {
    let cfg = preset_config("sudoku4");
    let (out, t) = train_until(&cfg, |err| 1.0 - err >= 0.99);
    let errs = test_errors(&out);
    let acc = 1.0 - errs.last().unwrap();
    let epochs = errs.len();
    let v = verdict(
        acc >= 0.99 && within(t, 1800),
        format!("board accuracy {acc:.4} after {epochs} epoch(s) of {}, {:.1}s", cfg.epochs, t.as_secs_f64()),
    );
    (v, epochs, acc)
}

fn permuted(epochs: usize, reference: f64) -> Verdict {
    let mut cfg = preset_config("sudoku4_permuted");
    cfg.epochs = epochs;
    let (out, t) = train_until(&cfg, |_| false);
    let acc = 1.0 - test_errors(&out).last().unwrap();
    verdict(
        (acc - reference).abs() <= 0.01,
        format!(
            "permuted {acc:.4} vs original {reference:.4} after {epochs} epoch(s), gap {:.2} pp, {:.1}s",
            100.0 * (acc - reference).abs(),
            t.as_secs_f64()
        ),
    )
}

// 8
fn sudoku9_smoke() -> Verdict {
    let cfg = preset_config("sudoku9_smoke");
    let (out, t) = train_until(&cfg, |err| 1.0 - err >= 0.6);
    let best = test_errors(&out).iter().map(|e| 1.0 - e).fold(0.0, f64::max);
    verdict(best >= 0.6, format!("best board accuracy {best:.3} over {} epoch(s), {:.0}s", out.history.len(), t.as_secs_f64()))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let names = [
        "gradient_fidelity",
        "backward_vs_dense",
        "monotone_descent",
        "rounding_law",
        "solver_quality",
        "parity_l20",
        "sudoku4",
        "sudoku9_smoke",
        "permutation_invariance",
    ];
    if args.iter().any(|a| a == "--list") {
        for n in names {
            println!("{n}: test");
        }
        return;
    }
    let full = args.iter().any(|a| a == "--ignored" || a == "--include-ignored")
        || std::env::var("SATNET_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let filter: Option<&String> = args.iter().find(|a| !a.starts_with('-'));
    let wanted = |name: &str| filter.is_none_or(|f| name.contains(f.as_str()));

    let mut failures = 0;
    let mut report = |id: usize, name: &str, v: Verdict| {
        println!("criterion {id} {name:<24} {}  {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failures += (!v.pass) as usize;
    };
    let simple: [(usize, &str, fn() -> Verdict); 6] = [
        (1, names[0], gradient_fidelity),
        (2, names[1], backward_vs_dense),
        (3, names[2], monotone_descent),
        (4, names[3], rounding_law),
        (5, names[4], solver_quality),
        (6, names[5], parity),
    ];
    for (id, name, f) in simple {
        if wanted(name) {
            report(id, name, f());
        }
    }
    if wanted(names[7]) {
        if full {
            report(8, names[7], sudoku9_smoke());
        } else {
            println!("criterion 8 {:<24} SKIP  opt-in: pass --include-ignored or set SATNET_ACCEPTANCE_FULL=1", names[7]);
        }
    }
    if wanted(names[6]) || wanted(names[8]) {
        let (v, epochs, acc) = sudoku4();
        report(7, names[6], v);
        if wanted(names[8]) {
            report(9, names[8], permuted(epochs, acc));
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all run criteria passed");
}

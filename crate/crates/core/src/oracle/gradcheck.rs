//! End-to-end finite-difference check of the layer gradients.
//!
//! Protocol per instance: draw a random layer and input, solve the forward
//! pass to `forward_tol`, and take the analytic gradients there. The reference
//! solve continues from the same initialization to `REFERENCE_TOL`, taking `N`
//! sweeps; every perturbed evaluation runs exactly `N` sweeps, which makes the
//! loss a smooth function of `S` and `z_I` around the base point. Replaying a
//! short, loosely converged solve instead would also differentiate its
//! truncation error, which grows with the sweep count.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::finite_diff::{finite_difference, relative_error};
use crate::error::{Error, Result};
use crate::layer::{LayerConfig, SatLayer};
use crate::train::loss::bce_loss;

/// Tolerance of the reference solve that fixes the replayed sweep count.
pub const REFERENCE_TOL: f64 = 1e-12;

/// Gradients smaller than this are compared on an absolute scale. Central
/// differences of an iteratively solved loss carry noise around 1e-8 at
/// `h = 1e-5`, so a smaller floor would only measure round-off.
pub const ABS_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckOptions {
    pub instances: usize,
    pub max_real: usize,
    pub max_aux: usize,
    pub max_clauses: usize,
    pub seed: u64,
    /// Per-coordinate relative error bound.
    pub tolerance: f64,
    /// Fraction of coordinates (per block) that must meet `tolerance`.
    pub coverage: f64,
    /// Bound on the worst coordinate of either block.
    pub worst_bound: f64,
    pub step: f64,
    pub forward_tol: f64,
    pub backward_tol: f64,
    /// Backward solves still moving after this many sweeps count as singular.
    pub backward_max_sweeps: usize,
    /// Output/input probabilities are kept inside `[δ, 1 - δ]`.
    pub prob_margin: f64,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            instances: 20,
            max_real: 8,
            max_aux: 4,
            max_clauses: 8,
            seed: 0,
            tolerance: 1e-3,
            coverage: 0.95,
            worst_bound: 1e-2,
            step: super::DEFAULT_STEP,
            forward_tol: 1e-8,
            backward_tol: 1e-13,
            backward_max_sweeps: 20_000,
            prob_margin: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockStats {
    pub coords: usize,
    pub within_tol: usize,
    pub worst: f64,
}

impl BlockStats {
    fn push(&mut self, err: f64, tol: f64) {
        self.coords += 1;
        if err <= tol {
            self.within_tol += 1;
        }
        self.worst = self.worst.max(err);
    }

    pub fn fraction(&self) -> f64 {
        if self.coords == 0 {
            1.0
        } else {
            self.within_tol as f64 / self.coords as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSummary {
    pub n_real: usize,
    pub n_aux: usize,
    pub m: usize,
    pub n_known: usize,
    pub forward_sweeps: usize,
    pub worst_d_s: f64,
    pub worst_d_z: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub options: GradcheckOptions,
    pub d_s: BlockStats,
    pub d_z_in: BlockStats,
    pub instances: Vec<InstanceSummary>,
    /// Draws discarded as unconverged, saturated, or singular.
    pub rejected: usize,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        let o = &self.options;
        [&self.d_s, &self.d_z_in].iter().all(|b| b.fraction() >= o.coverage && b.worst <= o.worst_bound)
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        writeln!(
            f,
            "gradcheck: {} instances ({} draws rejected), seed {}, tolerance {:e}, h {:e}",
            self.instances.len(),
            self.rejected,
            o.seed,
            o.tolerance,
            o.step
        )?;
        for (i, inst) in self.instances.iter().enumerate() {
            writeln!(
                f,
                "  instance {i:>2}: n_real={} n_aux={} m={} |I|={} sweeps={:<5} worst dS={:.3e} worst dz={:.3e}",
                inst.n_real, inst.n_aux, inst.m, inst.n_known, inst.forward_sweeps, inst.worst_d_s, inst.worst_d_z
            )?;
        }
        for (name, b) in [("dS", &self.d_s), ("dz_in", &self.d_z_in)] {
            writeln!(
                f,
                "  {name:<6} coords={:<5} within_tol={:<5} fraction={:.4} worst={:.3e}",
                b.coords,
                b.within_tol,
                b.fraction(),
                b.worst
            )?;
        }
        write!(f, "result: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// A drawn instance: layer, known inputs, targets for supervised outputs.
struct Instance {
    layer: SatLayer,
    known: Vec<usize>,
    z_known: Vec<f64>,
    targets: Vec<(usize, f64)>,
}

fn draw_instance(opts: &GradcheckOptions, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n_real = rng.random_range(2..=opts.max_real.max(2));
    let n_aux = rng.random_range(0..=opts.max_aux);
    let m = rng.random_range(1..=opts.max_clauses.max(1));
    let cfg = LayerConfig::new(n_real, n_aux, m)?
        .with_seed(rng.random())
        .with_solver(opts.forward_tol, 100_000);
    let mut layer = SatLayer::new(cfg)?;
    // weights at the scale a trained layer reaches, rather than the small init
    let normal = Normal::new(0.0, 1.0 / (m as f64).sqrt()).expect("valid std");
    for x in layer.weights_mut().as_mut_slice() {
        *x = normal.sample(rng);
    }
    let n_known = rng.random_range(1..n_real);
    let (known, z_known) =
        crate::layer::random_inputs(layer.config(), n_known, opts.prob_margin, 1.0 - opts.prob_margin, rng);
    let targets = (0..n_real)
        .filter(|i| known.binary_search(i).is_err())
        .map(|i| (i, if rng.random_bool(0.5) { 1.0 } else { 0.0 }))
        .collect();
    Ok(Instance { layer, known, z_known, targets })
}

fn supervised_loss(layer: &SatLayer, inst: &Instance, z_known: &[f64]) -> Result<(f64, Vec<f64>, crate::ForwardContext)> {
    let ctx = layer.forward(&inst.known, z_known)?;
    let z: Vec<f64> = inst.targets.iter().map(|&(i, _)| ctx.z(i).expect("target is an output")).collect();
    let y: Vec<f64> = inst.targets.iter().map(|&(_, t)| t).collect();
    let (loss, dz) = bce_loss(&z, &y)?;
    let mut d_z_out = vec![0.0; ctx.outputs.len()];
    for (&(i, _), g) in inst.targets.iter().zip(dz) {
        d_z_out[ctx.outputs.binary_search(&i).expect("target is an output")] = g;
    }
    Ok((loss, d_z_out, ctx))
}

/// Runs the protocol over `opts.instances` random layers.
pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut d_s = BlockStats::default();
    let mut d_z_in = BlockStats::default();
    let mut summaries = Vec::with_capacity(opts.instances);
    let mut rejected = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    for _ in 0..opts.instances {
        // redraw until both solves converge with supervised outputs away from the clamp (where the
        // output-gradient formula is exact), and the adjoint system is
        // solvable (rank-deficient fixed points have no well-defined gradient)
        let mut attempt = 0;
        let (mut inst, ctx, grads, reference_sweeps) = loop {
            attempt += 1;
            if attempt > 1000 {
                return Err(Error::InvalidArgument("could not draw a well-conditioned gradcheck instance".into()));
            }
            let mut inst = draw_instance(opts, &mut rng)?;
            let (_, d_z_out, ctx) = supervised_loss(&inst.layer, &inst, &inst.z_known)?;
            let lo = opts.prob_margin;
            let inside = inst.targets.iter().all(|&(i, _)| ctx.z(i).is_some_and(|z| z >= lo && z <= 1.0 - lo));
            if !(ctx.converged && inside) {
                rejected += 1;
                continue;
            }
            let mut tight = inst.layer.clone();
            tight.set_solver(REFERENCE_TOL, 1_000_000);
            let fixed = tight.forward(&inst.known, &inst.z_known)?;
            if !fixed.converged {
                rejected += 1;
                continue;
            }
            inst.layer.set_solver(opts.backward_tol, opts.backward_max_sweeps);
            let grads = inst.layer.backward(&ctx, &d_z_out, None)?;
            if !grads.backward_converged {
                rejected += 1;
                continue;
            }
            break (inst, ctx, grads, fixed.sweeps);
        };

        inst.layer.set_solver(0.0, reference_sweeps);

        let mut worst_s: f64 = 0.0;
        let s0 = inst.layer.weights().matrix().as_slice().to_vec();
        let mut probe = inst.layer.clone();
        let num_s = finite_difference(
            |x| {
                probe.weights_mut().as_mut_slice().copy_from_slice(x);
                supervised_loss(&probe, &inst, &inst.z_known).map(|r| r.0).unwrap_or(f64::NAN)
            },
            &s0,
            opts.step,
        )?;
        for (a, f) in grads.d_s.as_slice().iter().zip(&num_s) {
            let e = relative_error(*a, *f, ABS_FLOOR);
            worst_s = worst_s.max(e);
            d_s.push(e, opts.tolerance);
        }

        let mut worst_z: f64 = 0.0;
        let num_z = finite_difference(
            |z| supervised_loss(&inst.layer, &inst, z).map(|r| r.0).unwrap_or(f64::NAN),
            &inst.z_known,
            opts.step,
        )?;
        for (a, f) in grads.d_z_in.iter().zip(&num_z) {
            let e = relative_error(*a, *f, ABS_FLOOR);
            worst_z = worst_z.max(e);
            d_z_in.push(e, opts.tolerance);
        }

        let cfg = inst.layer.config();
        summaries.push(InstanceSummary {
            n_real: cfg.n_real,
            n_aux: cfg.n_aux,
            m: cfg.m,
            n_known: inst.known.len(),
            forward_sweeps: ctx.sweeps,
            worst_d_s: worst_s,
            worst_d_z: worst_z,
        });
    }
    Ok(GradcheckReport { options: opts.clone(), d_s, d_z_in, instances: summaries, rejected })
}

//! The differentiable MAXSAT layer.
//!
//! Forward: known inputs `z_ι ∈ [0,1]` are relaxed to unit vectors with
//! `v_ιᵀ v_⊤ = -cos(π z_ι)`, the remaining variables (unknown real variables
//! and every auxiliary variable) are solved by coordinate descent, and the
//! solved columns are read back as probabilities.
//!
//! Backward: the loss gradient on the outputs is pushed onto the output
//! columns, the projected adjoint system is solved by a second coordinate
//! descent (the `U` matrix), and gradients for the inputs and for `S` are
//! contracted from `U` in closed form. No forward iterate is stored.
//!
//! Variables are addressed by 0-based index `0..n_real + n_aux`; variable `i`
//! lives in column `i + 1` of `S` and `V` (column 0 is the truth direction).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, max_abs_diff, norm, normalize, Matrix};
use crate::sdp::{
    self, assignment_probabilities, probability_from_cosine, random_unit, rank_for, ClauseWeights,
    ForwardOutcome, RoundingObjective, SolveOptions, SphereEmbedding, TRUTH,
};

/// Blocks whose forward `‖g_o‖` falls below this are frozen in the backward solve.
pub const DEGENERATE_G_NORM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LayerConfig {
    pub n_real: usize,
    pub n_aux: usize,
    /// Number of clauses (rows of `S`).
    pub m: usize,
    /// Embedding rank; always `rank_for(n_real + n_aux)`.
    pub k: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    /// `δ` in the output-gradient clamp `z ∈ [δ, 1-δ]`.
    pub prob_clamp: f64,
    pub seed: u64,
}

impl LayerConfig {
    pub fn new(n_real: usize, n_aux: usize, m: usize) -> Result<Self> {
        let n = n_real + n_aux;
        if n == 0 {
            return Err(Error::InvalidArgument("layer needs at least one variable".into()));
        }
        let cfg = Self {
            n_real,
            n_aux,
            m,
            k: rank_for(n),
            tol: 1e-4,
            max_sweeps: 40,
            prob_clamp: 0.05,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_solver(mut self, tol: f64, max_sweeps: usize) -> Self {
        self.tol = tol;
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn n_vars(&self) -> usize {
        self.n_real + self.n_aux
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_sweeps: self.max_sweeps }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_vars() == 0 {
            problems.push("n_real + n_aux must be at least 1".to_string());
        } else if self.k != rank_for(self.n_vars()) {
            problems.push(format!("k = {} but rank_for({}) = {}", self.k, self.n_vars(), rank_for(self.n_vars())));
        }
        if self.m == 0 {
            problems.push("m must be at least 1".into());
        }
        if !(self.prob_clamp > 0.0 && self.prob_clamp < 0.5) {
            problems.push(format!("prob_clamp must lie in (0, 0.5), got {}", self.prob_clamp));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            problems.push(format!("tol must be finite and non-negative, got {}", self.tol));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Learnable clause weights plus the fixed random directions drawn at init.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub s: ClauseWeights,
    pub v_top: Vec<f64>,
    /// `k × n`; column `i` is the random unit vector of variable `i`.
    pub v_rand: Matrix,
}

impl LayerState {
    /// `S` entries are i.i.d. `N(0, 1/(m (n+1)))`; `v_⊤` and `v_i^rand` are uniform on the sphere.
    pub fn init(cfg: &LayerConfig) -> Self {
        let n = cfg.n_vars();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let std = 1.0 / ((cfg.m * (n + 1)) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        let s = Matrix::from_fn(cfg.m, n + 1, |_, _| normal.sample(&mut rng));
        let v_top = random_unit(cfg.k, &mut rng);
        let mut v_rand = Matrix::zeros(cfg.k, n);
        for i in 0..n {
            v_rand.col_mut(i).copy_from_slice(&random_unit(cfg.k, &mut rng));
        }
        Self { s: ClauseWeights::from_matrix(s).expect("finite init"), v_top, v_rand }
    }

    pub fn check_against(&self, cfg: &LayerConfig) -> Result<()> {
        let n = cfg.n_vars();
        if self.s.num_vars() != n || self.s.num_clauses() != cfg.m {
            return Err(Error::Dimension(format!(
                "S is {}x{}, config expects {}x{}",
                self.s.num_clauses(),
                self.s.num_vars() + 1,
                cfg.m,
                n + 1
            )));
        }
        if self.v_top.len() != cfg.k || self.v_rand.rows() != cfg.k || self.v_rand.cols() != n {
            return Err(Error::Dimension("random directions do not match the configured rank".into()));
        }
        Ok(())
    }
}

/// One training or evaluation example for a single layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Known real variables `I`, ascending.
    pub known: Vec<usize>,
    /// Input probabilities aligned with `known`.
    pub z_known: Vec<f64>,
    /// Supervised unknown variables and their target bits.
    pub targets: Vec<(usize, f64)>,
}

impl Sample {
    /// Builds a sample from full-length vectors: `mask[i]` marks variable `i`
    /// as known; every unknown variable is supervised with `target[i]`.
    pub fn from_mask(z: &[f64], mask: &[bool], target: Option<&[f64]>) -> Self {
        let mut known = Vec::new();
        let mut z_known = Vec::new();
        let mut targets = Vec::new();
        for (i, (&zi, &is_known)) in z.iter().zip(mask).enumerate() {
            if is_known {
                known.push(i);
                z_known.push(zi);
            } else if let Some(t) = target {
                targets.push((i, t[i]));
            }
        }
        Self { known, z_known, targets }
    }

    pub fn validate(&self, cfg: &LayerConfig) -> Result<()> {
        if self.known.len() != self.z_known.len() {
            return Err(Error::Dimension(format!(
                "{} known indices but {} input values",
                self.known.len(),
                self.z_known.len()
            )));
        }
        if self.known.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("known indices must be strictly ascending".into()));
        }
        if let Some(&last) = self.known.last() {
            if last >= cfg.n_real {
                return Err(Error::InvalidArgument(format!(
                    "known index {last} is not a real variable (n_real = {})",
                    cfg.n_real
                )));
            }
        }
        if let Some(z) = self.z_known.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return Err(Error::InvalidArgument(format!("input probability {z} outside [0, 1]")));
        }
        for &(i, t) in &self.targets {
            if i >= cfg.n_real || self.known.binary_search(&i).is_ok() {
                return Err(Error::InvalidArgument(format!("target index {i} is not an unknown real variable")));
            }
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("target {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Gradients produced by [`SatLayer::backward`].
#[derive(Clone, Debug)]
pub struct GradBundle {
    /// `∂ℓ/∂z_ι`, aligned with the forward context's `known`.
    pub d_z_in: Vec<f64>,
    /// `∂ℓ/∂S`, shaped like `S`.
    pub d_s: Matrix,
    /// Output variables whose forward `‖g_o‖` was degenerate.
    pub degenerate: Vec<usize>,
    pub backward_sweeps: usize,
    pub backward_converged: bool,
}

/// Everything the backward pass needs from a forward solve.
#[derive(Clone, Debug)]
pub struct ForwardContext {
    pub known: Vec<usize>,
    pub z_known: Vec<f64>,
    /// Solved variables `O`, ascending; includes every auxiliary variable.
    pub outputs: Vec<usize>,
    /// Probabilities aligned with `outputs`.
    pub z_out: Vec<f64>,
    pub embedding: SphereEmbedding,
    pub omega: Matrix,
    /// Converged `‖g_o‖`, aligned with `outputs`.
    pub g_norms: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

impl ForwardContext {
    /// Probability of output variable `var`, if it was solved.
    pub fn z(&self, var: usize) -> Option<f64> {
        self.outputs.binary_search(&var).ok().map(|p| self.z_out[p])
    }

    /// Probabilities for every real variable: inputs pass through, outputs come from the solve.
    pub fn full_assignment(&self, n_real: usize) -> Vec<f64> {
        let mut z = vec![0.0; n_real];
        for (&i, &zi) in self.known.iter().zip(&self.z_known) {
            z[i] = zi;
        }
        for (&o, &zo) in self.outputs.iter().zip(&self.z_out) {
            if o < n_real {
                z[o] = zo;
            }
        }
        z
    }
}

/// A configured layer: config, learnable state, and the cached projected
/// input directions `ŵ_i`.
#[derive(Clone, Debug)]
pub struct SatLayer {
    cfg: LayerConfig,
    state: LayerState,
    w_hat: Matrix,
}

impl SatLayer {
    pub fn new(cfg: LayerConfig) -> Result<Self> {
        cfg.validate()?;
        let state = LayerState::init(&cfg);
        Self::from_parts(cfg, state)
    }

    pub fn from_parts(cfg: LayerConfig, state: LayerState) -> Result<Self> {
        cfg.validate()?;
        state.check_against(&cfg)?;
        if (norm(&state.v_top) - 1.0).abs() > sdp::UNIT_TOL {
            return Err(Error::NonUnitColumn { col: TRUTH, norm: norm(&state.v_top) });
        }
        let w_hat = projected_directions(&state.v_top, &state.v_rand);
        Ok(Self { cfg, state, w_hat })
    }

    pub fn config(&self) -> &LayerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &LayerState {
        &self.state
    }

    pub fn weights(&self) -> &ClauseWeights {
        &self.state.s
    }

    /// Mutable access to `S` (the only learnable parameter).
    pub fn weights_mut(&mut self) -> &mut Matrix {
        self.state.s.matrix_mut()
    }

    pub fn set_solver(&mut self, tol: f64, max_sweeps: usize) {
        self.cfg.tol = tol;
        self.cfg.max_sweeps = max_sweeps;
    }

    /// Relaxed input columns (`k × |I|`) for the given variables and probabilities.
    pub fn relax_inputs(&self, known: &[usize], z_known: &[f64]) -> Result<Matrix> {
        if known.len() != z_known.len() {
            return Err(Error::Dimension("known indices and values differ in length".into()));
        }
        let mut out = Matrix::zeros(self.cfg.k, known.len());
        for (c, (&i, &z)) in known.iter().zip(z_known).enumerate() {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::InvalidArgument(format!("input probability {z} outside [0, 1]")));
            }
            if i >= self.cfg.n_vars() {
                return Err(Error::InvalidArgument(format!("variable {i} out of range")));
            }
            out.col_mut(c).copy_from_slice(&relax_input(z, &self.state.v_top, self.w_hat.col(i)));
        }
        Ok(out)
    }

    /// Projected, renormalized random direction `ŵ_i` of variable `i`.
    pub fn input_direction(&self, i: usize) -> &[f64] {
        self.w_hat.col(i)
    }

    pub fn forward_sample(&self, sample: &Sample) -> Result<ForwardContext> {
        sample.validate(&self.cfg)?;
        self.forward(&sample.known, &sample.z_known)
    }

    /// Relax inputs, solve every other variable, and read out probabilities.
    pub fn forward(&self, known: &[usize], z_known: &[f64]) -> Result<ForwardContext> {
        let n = self.cfg.n_vars();
        let k = self.cfg.k;
        let relaxed = self.relax_inputs(known, z_known)?;
        let mut is_known = vec![false; n];
        for &i in known {
            if i >= self.cfg.n_real {
                return Err(Error::InvalidArgument(format!("known index {i} is not a real variable")));
            }
            if std::mem::replace(&mut is_known[i], true) {
                return Err(Error::InvalidArgument(format!("variable {i} listed twice as known")));
            }
        }
        let outputs: Vec<usize> = (0..n).filter(|&i| !is_known[i]).collect();

        let mut v = Matrix::zeros(k, n + 1);
        v.col_mut(TRUTH).copy_from_slice(&self.state.v_top);
        for (c, &i) in known.iter().enumerate() {
            v.col_mut(i + 1).copy_from_slice(relaxed.col(c));
        }
        for &o in &outputs {
            v.col_mut(o + 1).copy_from_slice(self.state.v_rand.col(o));
        }
        let v = SphereEmbedding::new(v)?;
        let cols: Vec<usize> = outputs.iter().map(|&o| o + 1).collect();
        let ForwardOutcome { embedding, omega, g_norms, sweeps, converged } =
            sdp::coordinate_descent_forward(v, &self.state.s, &cols, &self.cfg.solve_options())?;
        let z_out = assignment_probabilities(&embedding, &cols);
        Ok(ForwardContext {
            known: known.to_vec(),
            z_known: z_known.to_vec(),
            outputs,
            z_out,
            embedding,
            omega,
            g_norms,
            sweeps,
            converged,
        })
    }

    /// Full backward pass given `∂ℓ/∂z_o` (aligned with `ctx.outputs`) and an
    /// optional direct dependence `∂ℓ/∂z_ι^⋆` (aligned with `ctx.known`).
    pub fn backward(&self, ctx: &ForwardContext, d_z_out: &[f64], d_z_direct: Option<&[f64]>) -> Result<GradBundle> {
        if d_z_out.len() != ctx.outputs.len() {
            return Err(Error::Dimension(format!(
                "{} output gradients for {} outputs",
                d_z_out.len(),
                ctx.outputs.len()
            )));
        }
        let d_v_out = grad_output_relaxation(d_z_out, &ctx.z_out, &self.state.v_top, self.cfg.prob_clamp);
        let cols: Vec<usize> = ctx.outputs.iter().map(|&o| o + 1).collect();
        let back = backward_coordinate_descent(
            &d_v_out,
            &ctx.embedding,
            &self.state.s,
            &cols,
            &ctx.g_norms,
            &self.cfg.solve_options(),
        )?;
        let known_cols: Vec<usize> = ctx.known.iter().map(|&i| i + 1).collect();
        let (d_v_in, d_s) = grads_from_u(&back.u, &ctx.embedding, &self.state.s, &known_cols)?;
        let d_z_in = grad_inputs(&d_v_in, &ctx.z_known, &ctx.known, &self.state.v_top, &self.w_hat, d_z_direct)?;
        Ok(GradBundle {
            d_z_in,
            d_s,
            degenerate: back.degenerate.iter().map(|&c| c - 1).collect(),
            backward_sweeps: back.sweeps,
            backward_converged: back.converged,
        })
    }

    /// Discrete outputs by repeated hyperplane rounding of a solved embedding.
    /// Returns 0/1 values aligned with `ctx.outputs`.
    pub fn round_outputs(
        &self,
        ctx: &ForwardContext,
        num_samples: usize,
        seed: u64,
        objective: RoundingObjective,
    ) -> Result<Vec<f64>> {
        let r = sdp::randomized_round(&ctx.embedding, &self.state.s, num_samples, seed, objective)?;
        Ok(ctx.outputs.iter().map(|&o| if r.assignment[o] { 1.0 } else { 0.0 }).collect())
    }

    pub fn into_parts(self) -> (LayerConfig, LayerState) {
        (self.cfg, self.state)
    }
}

/// `ŵ_i = normalize((I - v_⊤ v_⊤ᵀ) v_i^rand)` for every column of `v_rand`.
fn projected_directions(v_top: &[f64], v_rand: &Matrix) -> Matrix {
    let k = v_top.len();
    let mut out = Matrix::zeros(k, v_rand.cols());
    for i in 0..v_rand.cols() {
        let w = out.col_mut(i);
        w.copy_from_slice(v_rand.col(i));
        axpy(-dot(v_top, w), v_top, w);
        if normalize(w) < 1e-12 {
            // v_rand parallel to v_⊤: fall back to the first usable basis direction
            for e in 0..k {
                w.fill(0.0);
                w[e] = 1.0;
                axpy(-v_top[e], v_top, w);
                if normalize(w) > 1e-6 {
                    break;
                }
            }
        }
    }
    out
}

/// `v = -cos(πz) v_⊤ + sin(πz) ŵ` with `ŵ ⟂ v_⊤` unit, so `vᵀv_⊤ = -cos(πz)` and `‖v‖ = 1`.
pub fn relax_input(z: f64, v_top: &[f64], w_hat: &[f64]) -> Vec<f64> {
    let (s, c) = (PI * z).sin_cos();
    v_top.iter().zip(w_hat).map(|(t, w)| -c * t + s * w).collect()
}

/// `∂v/∂z = π (sin(πz) v_⊤ + cos(πz) ŵ)`, consistent with [`relax_input`].
pub fn relax_input_derivative(z: f64, v_top: &[f64], w_hat: &[f64]) -> Vec<f64> {
    let (s, c) = (PI * z).sin_cos();
    v_top.iter().zip(w_hat).map(|(t, w)| PI * (s * t + c * w)).collect()
}

/// `∂ℓ/∂v_o = (∂ℓ/∂z_o) / (π sin(π z̃_o)) · v_⊤` with `z̃_o = clamp(z_o, δ, 1-δ)`.
/// Returns a `k × |O|` matrix.
pub fn grad_output_relaxation(d_z_out: &[f64], z_out: &[f64], v_top: &[f64], clamp: f64) -> Matrix {
    let mut out = Matrix::zeros(v_top.len(), d_z_out.len());
    for (c, (&dz, &z)) in d_z_out.iter().zip(z_out).enumerate() {
        if dz != 0.0 {
            let zt = z.clamp(clamp, 1.0 - clamp);
            axpy(dz / (PI * (PI * zt).sin()), v_top, out.col_mut(c));
        }
    }
    out
}

/// Gauss-Seidel state for the projected adjoint system; `Ψ = U Sᵀ` is kept
/// current with rank-one corrections.
pub struct BackwardSolver<'a> {
    v: &'a SphereEmbedding,
    s: &'a ClauseWeights,
    d_v: &'a Matrix,
    u: Matrix,
    psi: Matrix,
    s_norm_sq: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> BackwardSolver<'a> {
    pub fn new(d_v_out: &'a Matrix, v: &'a SphereEmbedding, s: &'a ClauseWeights) -> Self {
        Self {
            v,
            s,
            d_v: d_v_out,
            u: Matrix::zeros(v.rank(), v.num_vars() + 1),
            psi: Matrix::zeros(v.rank(), s.num_clauses()),
            s_norm_sq: s.column_norms_sq(),
            scratch: vec![0.0; v.rank()],
        }
    }

    /// Updates `u_col` (the `pos`-th output) given its forward `‖g_o‖`;
    /// returns the largest entry change.
    pub fn update(&mut self, pos: usize, col: usize, g_norm: f64) -> f64 {
        let mut dg = std::mem::take(&mut self.scratch);
        // dg = Ψ s_o - ‖s_o‖² u_o - ∂ℓ/∂v_o
        dg.fill(0.0);
        for (j, &sj) in self.s.column(col).iter().enumerate() {
            if sj != 0.0 {
                axpy(sj, self.psi.col(j), &mut dg);
            }
        }
        axpy(-self.s_norm_sq[col], self.u.col(col), &mut dg);
        axpy(-1.0, self.d_v.col(pos), &mut dg);
        // u_new = -P_o dg / ‖g_o‖, stored in dg as the step u_new - u_old
        let v_o = self.v.column(col);
        let along = dot(v_o, &dg);
        let u_old = self.u.col(col);
        let mut change = 0.0;
        for ((d, &vk), &uk) in dg.iter_mut().zip(v_o).zip(u_old) {
            let new = -(*d - along * vk) / g_norm;
            *d = new - uk;
            change = f64::max(change, d.abs());
        }
        axpy(1.0, &dg, self.u.col_mut(col));
        for (j, &sj) in self.s.column(col).iter().enumerate() {
            if sj != 0.0 {
                axpy(sj, &dg, self.psi.col_mut(j));
            }
        }
        self.scratch = dg;
        change
    }

    /// `‖Ψ - U Sᵀ‖_∞` against a fresh product.
    pub fn cache_drift(&self) -> f64 {
        let fresh = Matrix::mul_transpose(&self.u, self.s.matrix());
        max_abs_diff(fresh.as_slice(), self.psi.as_slice())
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }
}

#[derive(Clone, Debug)]
pub struct BackwardOutcome {
    /// `k × (n+1)`; nonzero only in output columns.
    pub u: Matrix,
    pub psi: Matrix,
    pub sweeps: usize,
    pub converged: bool,
    /// Output columns frozen at zero because `‖g_o‖ < DEGENERATE_G_NORM`.
    pub degenerate: Vec<usize>,
}

/// Solves `P((C + D) ⊗ I_k) P vec(U_O) = vec(∂ℓ/∂V_O)` by block coordinate
/// descent. `d_v_out` and `g_norms` are aligned with `outputs` (column indices).
pub fn backward_coordinate_descent(
    d_v_out: &Matrix,
    v: &SphereEmbedding,
    s: &ClauseWeights,
    outputs: &[usize],
    g_norms: &[f64],
    opts: &SolveOptions,
) -> Result<BackwardOutcome> {
    sdp::validate_outputs(outputs, s.num_vars())?;
    if v.num_vars() != s.num_vars() || d_v_out.rows() != v.rank() {
        return Err(Error::Dimension("backward inputs disagree on n or k".into()));
    }
    if d_v_out.cols() != outputs.len() || g_norms.len() != outputs.len() {
        return Err(Error::Dimension(format!(
            "{} outputs but {} gradient columns and {} g norms",
            outputs.len(),
            d_v_out.cols(),
            g_norms.len()
        )));
    }
    let active: Vec<(usize, usize, f64)> = outputs
        .iter()
        .zip(g_norms)
        .enumerate()
        .filter(|(_, (_, &g))| g >= DEGENERATE_G_NORM)
        .map(|(p, (&c, &g))| (p, c, g))
        .collect();
    let degenerate = outputs
        .iter()
        .zip(g_norms)
        .filter(|(_, &g)| g < DEGENERATE_G_NORM)
        .map(|(&c, _)| c)
        .collect();

    let mut solver = BackwardSolver::new(d_v_out, v, s);
    let mut sweeps = 0;
    let mut converged = active.is_empty() || d_v_out.max_abs() == 0.0;
    while !converged && sweeps < opts.max_sweeps {
        let change = active.iter().map(|&(p, c, g)| solver.update(p, c, g)).fold(0.0, f64::max);
        sweeps += 1;
        converged = change < opts.tol;
    }
    Ok(BackwardOutcome { u: solver.u, psi: solver.psi, sweeps, converged, degenerate })
}

/// From `U` (`k × (n+1)`): `∂ℓ/∂V_I = -(U Sᵀ) S_I` (columns aligned with
/// `known_cols`) and `∂ℓ/∂S = -(U Sᵀ)ᵀ V - (V Sᵀ)ᵀ U`.
pub fn grads_from_u(u: &Matrix, v: &SphereEmbedding, s: &ClauseWeights, known_cols: &[usize]) -> Result<(Matrix, Matrix)> {
    let (k, cols) = (v.rank(), v.num_vars() + 1);
    if u.rows() != k || u.cols() != cols || s.matrix().cols() != cols {
        return Err(Error::Dimension("U, V and S disagree in shape".into()));
    }
    let w = Matrix::mul_transpose(u, s.matrix());
    let omega = Matrix::mul_transpose(v.matrix(), s.matrix());
    let m = s.num_clauses();

    let mut d_v_in = Matrix::zeros(k, known_cols.len());
    for (c, &i) in known_cols.iter().enumerate() {
        let out = d_v_in.col_mut(c);
        for (j, &sj) in s.column(i).iter().enumerate() {
            if sj != 0.0 {
                axpy(-sj, w.col(j), out);
            }
        }
    }

    let mut d_s = Matrix::zeros(m, cols);
    for i in 0..cols {
        let vi = v.column(i);
        let ui = u.col(i);
        let u_zero = ui.iter().all(|&x| x == 0.0);
        let out = d_s.col_mut(i);
        for (j, dsj) in out.iter_mut().enumerate() {
            let mut val = -dot(w.col(j), vi);
            if !u_zero {
                val -= dot(omega.col(j), ui);
            }
            *dsj = val;
        }
    }
    Ok((d_v_in, d_s))
}

/// `∂ℓ/∂z_ι = ∂ℓ/∂z_ι^⋆ + (∂v_ι/∂z_ι)ᵀ ∂ℓ/∂v_ι`.
pub fn grad_inputs(
    d_v_in: &Matrix,
    z_known: &[f64],
    known: &[usize],
    v_top: &[f64],
    w_hat: &Matrix,
    d_z_direct: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if d_v_in.cols() != known.len() || z_known.len() != known.len() {
        return Err(Error::Dimension("input gradient shapes disagree".into()));
    }
    if let Some(d) = d_z_direct {
        if d.len() != known.len() {
            return Err(Error::Dimension(format!("{} direct terms for {} inputs", d.len(), known.len())));
        }
    }
    Ok(known
        .iter()
        .enumerate()
        .map(|(c, &i)| {
            let dv_dz = relax_input_derivative(z_known[c], v_top, w_hat.col(i));
            let direct = d_z_direct.map_or(0.0, |d| d[c]);
            direct + dot(&dv_dz, d_v_in.col(c))
        })
        .collect())
}

/// Cosine-to-truth readout used by tests that perturb `v_o` directly.
pub fn output_probability(v_o: &[f64], v_top: &[f64]) -> f64 {
    probability_from_cosine(dot(v_o, v_top))
}

/// Draws a random layer input: `n_known` distinct real variables with
/// probabilities uniform in `[lo, hi]`.
pub fn random_inputs<R: Rng + ?Sized>(cfg: &LayerConfig, n_known: usize, lo: f64, hi: f64, rng: &mut R) -> (Vec<usize>, Vec<f64>) {
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, cfg.n_real, n_known.min(cfg.n_real)).into_vec();
    idx.sort_unstable();
    let z = idx.iter().map(|_| rng.random_range(lo..=hi)).collect();
    (idx, z)
}

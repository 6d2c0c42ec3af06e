//! Low-rank SDP relaxation of MAXSAT and its block coordinate descent solver.
//!
//! Variables are relaxed to unit vectors `v_i ∈ R^k`, measured against a fixed
//! truth direction stored in column [`TRUTH`] of the embedding. The relaxed
//! problem minimizes `<SᵀS, VᵀV> = ‖V Sᵀ‖²_F` over the product of unit spheres.
//! Each block update `v_o = -g_o / ‖g_o‖` exactly minimizes the objective in
//! `v_o`, and the solver keeps `Ω = V Sᵀ` current with rank-one corrections so
//! that one sweep costs `O(n m k)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cnf::CnfInstance;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, max_abs_diff, norm, Matrix};

/// Column index of the truth direction in both `S` and `V`.
pub const TRUTH: usize = 0;

/// Allowed deviation of a column norm from 1.
pub const UNIT_TOL: f64 = 1e-9;

/// Smallest rank at which the low-rank problem recovers the SDP optimum for
/// `n` variables: `⌊√(2n)⌋ + 1`.
pub fn rank_for(n: usize) -> usize {
    assert!(n >= 1, "rank_for requires at least one variable");
    (2 * n).isqrt() + 1
}

/// Clause weight matrix `S` (`m × (n+1)`); column [`TRUTH`] is the truth column.
#[derive(Clone, Debug, PartialEq)]
pub struct ClauseWeights(Matrix);

impl ClauseWeights {
    pub fn zeros(num_clauses: usize, num_vars: usize) -> Self {
        Self(Matrix::zeros(num_clauses, num_vars + 1))
    }

    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        if matrix.cols() == 0 {
            return Err(Error::Dimension("clause matrix needs a truth column".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidArgument("clause matrix has non-finite entries".into()));
        }
        Ok(Self(matrix))
    }

    pub fn num_clauses(&self) -> usize {
        self.0.rows()
    }

    /// Number of variables, excluding the truth column.
    pub fn num_vars(&self) -> usize {
        self.0.cols() - 1
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        self.0.col(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        (0..self.0.cols()).map(|i| dot(self.column(i), self.column(i))).collect()
    }
}

/// Relaxation vectors `V` (`k × (n+1)`), every column on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereEmbedding(Matrix);

impl SphereEmbedding {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.cols() == 0 || matrix.rows() == 0 {
            return Err(Error::Dimension("embedding must be at least 1 x 1".into()));
        }
        for c in 0..matrix.cols() {
            check_unit(c, matrix.col(c))?;
        }
        Ok(Self(matrix))
    }

    /// Independent uniformly random unit columns.
    pub fn random<R: Rng + ?Sized>(rank: usize, num_vars: usize, rng: &mut R) -> Self {
        let mut m = Matrix::zeros(rank, num_vars + 1);
        for c in 0..=num_vars {
            m.col_mut(c).copy_from_slice(&random_unit(rank, rng));
        }
        Self(m)
    }

    pub fn rank(&self) -> usize {
        self.0.rows()
    }

    pub fn num_vars(&self) -> usize {
        self.0.cols() - 1
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        self.0.col(i)
    }

    pub fn truth(&self) -> &[f64] {
        self.0.col(TRUTH)
    }

    /// Replaces column `i`; the new column must be unit norm.
    pub fn set_column(&mut self, i: usize, v: &[f64]) -> Result<()> {
        if v.len() != self.rank() {
            return Err(Error::Dimension(format!("column has length {}, rank is {}", v.len(), self.rank())));
        }
        check_unit(i, v)?;
        self.0.col_mut(i).copy_from_slice(v);
        Ok(())
    }

    pub(crate) fn column_mut(&mut self, i: usize) -> &mut [f64] {
        self.0.col_mut(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Largest `|‖v_i‖ - 1|` over all columns.
    pub fn max_unit_deviation(&self) -> f64 {
        (0..self.0.cols()).map(|c| (norm(self.0.col(c)) - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn check_unit(col: usize, v: &[f64]) -> Result<()> {
    let n = norm(v);
    if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitColumn { col, norm: n });
    }
    Ok(())
}

/// A uniformly distributed point on the unit sphere in `R^k` (normalized Gaussian).
pub fn random_unit<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Builds `S = [s̃_⊤ s̃_1 … s̃_n] · diag(1/√(4|s̃_j|))` where `s̃_⊤ = -1` and
/// `|s̃_j|` is the number of literals in clause `j`.
pub fn clause_matrix_from_cnf(cnf: &CnfInstance) -> Result<ClauseWeights> {
    let mut s = ClauseWeights::zeros(cnf.num_clauses(), cnf.num_vars());
    for (j, clause) in cnf.clauses().iter().enumerate() {
        let len = cnf.clause_len(j);
        if len == 0 {
            return Err(Error::EmptyClause(j));
        }
        let scale = 1.0 / (4.0 * len as f64).sqrt();
        let m = s.matrix_mut();
        m.set(j, TRUTH, -scale);
        for (i, &sign) in clause.iter().enumerate() {
            if sign != 0 {
                m.set(j, i + 1, sign as f64 * scale);
            }
        }
    }
    Ok(s)
}

fn check_dims(v: &SphereEmbedding, s: &ClauseWeights) -> Result<()> {
    if v.num_vars() != s.num_vars() {
        return Err(Error::Dimension(format!(
            "embedding has {} variable columns, clause matrix has {}",
            v.num_vars(),
            s.num_vars()
        )));
    }
    Ok(())
}

/// `<SᵀS, VᵀV>`, evaluated as `‖V Sᵀ‖²_F`.
pub fn sdp_objective(v: &SphereEmbedding, s: &ClauseWeights) -> Result<f64> {
    check_dims(v, s)?;
    let omega = Matrix::mul_transpose(v.matrix(), s.matrix());
    Ok(dot(omega.as_slice(), omega.as_slice()))
}

/// `g_i = V Sᵀ s_i - ‖s_i‖² v_i`, the coefficient of `v_i` in the objective.
pub fn compute_g(v: &SphereEmbedding, s: &ClauseWeights, i: usize) -> Result<Vec<f64>> {
    check_dims(v, s)?;
    if i == TRUTH || i > v.num_vars() {
        return Err(Error::InvalidArgument(format!("column {i} is not a variable column")));
    }
    let si = s.column(i);
    let mut g = vec![0.0; v.rank()];
    for j in 0..=v.num_vars() {
        let w = dot(s.column(j), si);
        if w != 0.0 {
            axpy(w, v.column(j), &mut g);
        }
    }
    axpy(-dot(si, si), v.column(i), &mut g);
    Ok(g)
}

/// Stopping rule shared by the forward and backward solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Stop once the largest per-entry change of any updated column in a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_sweeps: 40 }
    }
}

/// Coordinate descent state: the embedding plus the cached product `Ω = V Sᵀ` (`k × m`).
pub struct ForwardSolver<'a> {
    s: &'a ClauseWeights,
    v: SphereEmbedding,
    omega: Matrix,
    s_norm_sq: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> ForwardSolver<'a> {
    pub fn new(v: SphereEmbedding, s: &'a ClauseWeights) -> Result<Self> {
        check_dims(&v, s)?;
        let omega = Matrix::mul_transpose(v.matrix(), s.matrix());
        let s_norm_sq = s.column_norms_sq();
        let scratch = vec![0.0; v.rank()];
        Ok(Self { s, v, omega, s_norm_sq, scratch })
    }

    /// `g_i` from the cached product.
    pub fn gradient(&self, i: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.v.rank()];
        self.gradient_into(i, &mut g);
        g
    }

    fn gradient_into(&self, i: usize, g: &mut [f64]) {
        g.fill(0.0);
        for (j, &sij) in self.s.column(i).iter().enumerate() {
            if sij != 0.0 {
                axpy(sij, self.omega.col(j), g);
            }
        }
        axpy(-self.s_norm_sq[i], self.v.column(i), g);
    }

    /// Exact minimization over column `i`. Returns the largest entry change;
    /// a zero `g_i` leaves the column unchanged and returns 0.
    pub fn update(&mut self, i: usize) -> f64 {
        let mut g = std::mem::take(&mut self.scratch);
        self.gradient_into(i, &mut g);
        let gn = norm(&g);
        let mut change = 0.0;
        if gn > 0.0 {
            // g becomes the step v_new - v_old
            let old = self.v.column(i);
            for (gk, &ok) in g.iter_mut().zip(old) {
                let new = -*gk / gn;
                *gk = new - ok;
                change = f64::max(change, gk.abs());
            }
            axpy(1.0, &g, self.v.column_mut(i));
            for (j, &sij) in self.s.column(i).iter().enumerate() {
                if sij != 0.0 {
                    axpy(sij, &g, self.omega.col_mut(j));
                }
            }
        }
        self.scratch = g;
        change
    }

    /// One pass over `cols` in the given order; returns the largest entry change.
    pub fn sweep(&mut self, cols: &[usize]) -> f64 {
        cols.iter().map(|&i| self.update(i)).fold(0.0, f64::max)
    }

    /// `‖Ω - V Sᵀ‖_∞` against a fresh product.
    pub fn cache_drift(&self) -> f64 {
        let fresh = Matrix::mul_transpose(self.v.matrix(), self.s.matrix());
        max_abs_diff(fresh.as_slice(), self.omega.as_slice())
    }

    pub fn embedding(&self) -> &SphereEmbedding {
        &self.v
    }

    pub fn omega(&self) -> &Matrix {
        &self.omega
    }

    pub fn into_parts(self) -> (SphereEmbedding, Matrix) {
        (self.v, self.omega)
    }
}

/// Result of a forward solve.
#[derive(Clone, Debug)]
pub struct ForwardOutcome {
    pub embedding: SphereEmbedding,
    /// `Ω = V Sᵀ` at the returned embedding.
    pub omega: Matrix,
    /// `‖g_o‖` at the returned embedding, aligned with the output columns.
    pub g_norms: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

pub(crate) fn validate_outputs(outputs: &[usize], num_vars: usize) -> Result<()> {
    let mut seen = vec![false; num_vars + 1];
    for &o in outputs {
        if o == TRUTH || o > num_vars {
            return Err(Error::InvalidArgument(format!("output column {o} out of range 1..={num_vars}")));
        }
        if std::mem::replace(&mut seen[o], true) {
            return Err(Error::InvalidArgument(format!("output column {o} listed twice")));
        }
    }
    Ok(())
}

/// Runs coordinate descent over `outputs` (in the given order) starting from
/// `v`. Columns outside `outputs` are never modified.
pub fn coordinate_descent_forward(
    v: SphereEmbedding,
    s: &ClauseWeights,
    outputs: &[usize],
    opts: &SolveOptions,
) -> Result<ForwardOutcome> {
    validate_outputs(outputs, s.num_vars())?;
    // re-validate: a caller could have built the matrix through `into_matrix` round trips
    for c in 0..v.matrix().cols() {
        check_unit(c, v.column(c))?;
    }
    let mut solver = ForwardSolver::new(v, s)?;
    let mut sweeps = 0;
    let mut converged = outputs.is_empty();
    while !converged && sweeps < opts.max_sweeps {
        let change = solver.sweep(outputs);
        sweeps += 1;
        converged = change < opts.tol;
    }
    let g_norms = outputs.iter().map(|&o| norm(&solver.gradient(o))).collect();
    let (embedding, omega) = solver.into_parts();
    Ok(ForwardOutcome { embedding, omega, g_norms, sweeps, converged })
}

/// `z_o = arccos(-v_oᵀ v_⊤) / π`, the probability that a random hyperplane
/// puts `v_o` on the same side as the truth direction.
pub fn assignment_probabilities(v: &SphereEmbedding, outputs: &[usize]) -> Vec<f64> {
    let top = v.truth();
    outputs.iter().map(|&o| probability_from_cosine(dot(v.column(o), top))).collect()
}

#[inline]
pub fn probability_from_cosine(cos_to_truth: f64) -> f64 {
    ((-cos_to_truth).clamp(-1.0, 1.0).acos() / std::f64::consts::PI).clamp(0.0, 1.0)
}

/// How candidate roundings are ranked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundingObjective {
    /// Number of clauses `j` with some `i ≥ 1` such that `S_ji · ṽ_i > 0`;
    /// the MAXSAT count when `S` comes from a CNF.
    ClauseCount,
    /// `-‖S ṽ‖²` with `ṽ_⊤ = +1`: the relaxed objective at a discrete point.
    /// Useful for learned, dense `S` where nearly every sign pattern satisfies
    /// every row.
    Relaxed,
}

/// Score of a discrete assignment (larger is better).
pub fn rounding_score(s: &ClauseWeights, assignment: &[bool], objective: RoundingObjective) -> f64 {
    debug_assert_eq!(assignment.len(), s.num_vars());
    let m = s.num_clauses();
    match objective {
        RoundingObjective::ClauseCount => {
            let mut sat = vec![false; m];
            for (i, &b) in assignment.iter().enumerate() {
                let sign = if b { 1.0 } else { -1.0 };
                for (j, &sji) in s.column(i + 1).iter().enumerate() {
                    if sji * sign > 0.0 {
                        sat[j] = true;
                    }
                }
            }
            sat.iter().filter(|&&x| x).count() as f64
        }
        RoundingObjective::Relaxed => {
            let mut sv = s.column(TRUTH).to_vec();
            for (i, &b) in assignment.iter().enumerate() {
                axpy(if b { 1.0 } else { -1.0 }, s.column(i + 1), &mut sv);
            }
            -dot(&sv, &sv)
        }
    }
}

/// Rounds every variable column with the hyperplane normal to `r`: variable
/// `i` is true iff `v_i` and `v_⊤` fall on the same side.
pub fn round_with_hyperplane(v: &SphereEmbedding, r: &[f64]) -> Vec<bool> {
    let top_side = dot(v.truth(), r) >= 0.0;
    (1..=v.num_vars()).map(|i| (dot(v.column(i), r) >= 0.0) == top_side).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rounding {
    /// Truth value per variable (column `i + 1` of `V`).
    pub assignment: Vec<bool>,
    pub score: f64,
}

/// Draws `num_samples` random hyperplanes, rounds with each, and keeps the
/// highest-scoring assignment (earliest sample on ties).
pub fn randomized_round(
    v: &SphereEmbedding,
    s: &ClauseWeights,
    num_samples: usize,
    seed: u64,
    objective: RoundingObjective,
) -> Result<Rounding> {
    check_dims(v, s)?;
    if num_samples == 0 {
        return Err(Error::InvalidArgument("randomized rounding needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Rounding> = None;
    for _ in 0..num_samples {
        let r = random_unit(v.rank(), &mut rng);
        let assignment = round_with_hyperplane(v, &r);
        let score = rounding_score(s, &assignment, objective);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(Rounding { assignment, score });
        }
    }
    Ok(best.expect("num_samples >= 1"))
}

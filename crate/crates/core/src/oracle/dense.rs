use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sdp::{ClauseWeights, SphereEmbedding};

/// Largest `k·|O|` the dense solve will materialize.
pub const MAX_DENSE_DIM: usize = 400;

/// Relative singular value cutoff realizing the pseudoinverse.
const PINV_RTOL: f64 = 1e-10;

/// Materializes `P((C + D) ⊗ I_k)P` with `C = S_OᵀS_O - diag(‖s_o‖²)`,
/// `D = diag(‖g_o‖)` and `P = diag(I_k - v_o v_oᵀ)`. `outputs` are column
/// indices of `S`/`V`; blocks are ordered as given.
pub fn projected_system(v: &SphereEmbedding, s: &ClauseWeights, outputs: &[usize], g_norms: &[f64]) -> Result<DMatrix<f64>> {
    let k = v.rank();
    let no = outputs.len();
    let dim = k * no;
    if dim > MAX_DENSE_DIM {
        return Err(Error::SizeLimit(format!("k·|O| = {dim} exceeds {MAX_DENSE_DIM}")));
    }
    if g_norms.len() != no {
        return Err(Error::Dimension("one g norm per output required".into()));
    }
    let sm = s.matrix();
    let vm = v.matrix();
    let m = sm.rows();

    let mut coupling = DMatrix::<f64>::zeros(no, no);
    for (a, &oa) in outputs.iter().enumerate() {
        for (b, &ob) in outputs.iter().enumerate() {
            coupling[(a, b)] = if a == b {
                g_norms[a]
            } else {
                (0..m).map(|j| sm.get(j, oa) * sm.get(j, ob)).sum()
            };
        }
    }
    let kron = coupling.kronecker(&DMatrix::<f64>::identity(k, k));

    let mut proj = DMatrix::<f64>::zeros(dim, dim);
    for (a, &oa) in outputs.iter().enumerate() {
        for r in 0..k {
            for c in 0..k {
                let id = if r == c { 1.0 } else { 0.0 };
                proj[(a * k + r, a * k + c)] = id - vm.get(r, oa) * vm.get(c, oa);
            }
        }
    }
    Ok(&proj * kron * &proj)
}

fn stack(cols: &Matrix) -> DVector<f64> {
    DVector::from_column_slice(cols.as_slice())
}

/// `U_O = (P((C + D) ⊗ I_k)P)^† vec(∂ℓ/∂V_O)` by truncated SVD.
/// `d_v_out` is `k × |O|`, aligned with `outputs`; returns the same shape.
pub fn dense_backward_solve(
    d_v_out: &Matrix,
    v: &SphereEmbedding,
    s: &ClauseWeights,
    outputs: &[usize],
    g_norms: &[f64],
) -> Result<Matrix> {
    if d_v_out.rows() != v.rank() || d_v_out.cols() != outputs.len() {
        return Err(Error::Dimension("∂ℓ/∂V_O must be k × |O|".into()));
    }
    let system = projected_system(v, s, outputs, g_norms)?;
    let rhs = stack(d_v_out);
    if system.nrows() == 0 {
        return Ok(d_v_out.clone());
    }
    let svd = system.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = PINV_RTOL * sigma_max;
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested Vᵀ");
    let mut coeffs = u.transpose() * rhs;
    for (c, &sv) in coeffs.iter_mut().zip(svd.singular_values.iter()) {
        *c = if sv > cutoff { *c / sv } else { 0.0 };
    }
    let x = vt.transpose() * coeffs;
    Ok(Matrix::from_col_major(d_v_out.rows(), d_v_out.cols(), x.as_slice().to_vec()))
}

/// `‖M vec(U_O) - P vec(∂ℓ/∂V_O)‖_∞` for the projected system `M`.
pub fn projected_residual(
    u_out: &Matrix,
    d_v_out: &Matrix,
    v: &SphereEmbedding,
    s: &ClauseWeights,
    outputs: &[usize],
    g_norms: &[f64],
) -> Result<f64> {
    let system = projected_system(v, s, outputs, g_norms)?;
    let k = v.rank();
    let mut p_rhs = stack(d_v_out);
    for (a, &oa) in outputs.iter().enumerate() {
        let vo = v.column(oa);
        let seg = p_rhs.rows(a * k, k).clone_owned();
        let along: f64 = seg.iter().zip(vo).map(|(x, y)| x * y).sum();
        for r in 0..k {
            p_rhs[a * k + r] -= along * vo[r];
        }
    }
    let lhs = system * stack(u_out);
    Ok((lhs - p_rhs).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rhs_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = SphereEmbedding::random(3, 3, &mut rng);
        let s = ClauseWeights::from_matrix(Matrix::from_fn(2, 4, |r, c| (r + 2 * c) as f64 * 0.1 - 0.3)).unwrap();
        let u = dense_backward_solve(&Matrix::zeros(3, 2), &v, &s, &[1, 3], &[0.7, 1.1]).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn size_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = SphereEmbedding::random(21, 20, &mut rng);
        let s = ClauseWeights::zeros(2, 20);
        let outs: Vec<usize> = (1..=20).collect();
        let r = dense_backward_solve(&Matrix::zeros(21, 20), &v, &s, &outs, &[1.0; 20]);
        assert!(matches!(r, Err(Error::SizeLimit(_))));
    }
}

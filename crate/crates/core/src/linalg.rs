//! Dense generalized symmetric eigenproblems `H x = E S x` with `S` positive
//! definite, solved by Cholesky reduction to standard form.

use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Mat, MatRef, Par, Side};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("overlap matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("symmetric eigensolver did not converge")]
    NoConvergence,
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

/// Eigenpairs sorted by ascending eigenvalue; eigenvectors are the columns of
/// `vectors`, normalized so that `Xᵀ S X = 1`.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

pub fn generalized_eigh(h: MatRef<'_, f64>, s: MatRef<'_, f64>) -> Result<Eigenpairs, LinalgError> {
    let n = h.nrows();
    if h.ncols() != n || s.nrows() != n || s.ncols() != n {
        return Err(LinalgError::Dimension(n, s.nrows()));
    }
    let llt = s.llt(Side::Lower).map_err(|_| LinalgError::NotPositiveDefinite)?;
    let l = llt.L();
    // C = L⁻¹ H L⁻ᵀ
    let mut x = h.to_owned();
    solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c.self_adjoint_eigen(Side::Lower).map_err(|_| LinalgError::NoConvergence)?;
    let values: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let mut vectors = evd.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), vectors.as_mut(), Par::Seq);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values_sorted = order.iter().map(|&i| values[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(Eigenpairs {
        values: values_sorted,
        vectors,
    })
}

/// Flip eigenvector signs so that the first coefficient whose magnitude
/// exceeds `1e-3` of the column maximum is positive.
pub fn fix_signs(vectors: &mut Mat<f64>) {
    for j in 0..vectors.ncols() {
        let col = vectors.col(j);
        let max = (0..col.nrows()).map(|i| col[i].abs()).fold(0.0, f64::max);
        let lead = (0..col.nrows()).map(|i| col[i]).find(|v| v.abs() > 1e-3 * max).unwrap_or(0.0);
        if lead < 0.0 {
            for i in 0..vectors.nrows() {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
}

/// `Aᵀ M B` for dense operands.
pub fn sandwich(a: MatRef<'_, f64>, m: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mb = m * b;
    a.transpose() * mb
}

/// Kronecker product `A ⊗ B` (row index `i_a * n_b + i_b`).
pub fn kron(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows() * b.nrows(), a.ncols() * b.ncols());
    faer::linalg::kron::kron(out.as_mut(), a, b);
    out
}

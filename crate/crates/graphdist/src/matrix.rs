//! Small dense linear-algebra helpers shared by the distance modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Moore-Penrose pseudoinverse of a symmetric matrix via full
/// eigendecomposition, nulling eigenvalues below `1e-10 * max|lambda|`.
///
/// `on_kernel` receives the number of nulled eigenvalues and may veto the
/// result (used to reject disconnected Laplacians, which have more than one
/// zero eigenvalue).
pub fn symmetric_pseudoinverse<F>(m: &DMatrix<f64>, on_kernel: F) -> Result<DMatrix<f64>>
where
    F: Fn(usize) -> Option<Error>,
{
    let eig = m.clone().symmetric_eigen();
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let tol = 1e-10 * max_abs.max(1e-300);
    let mut zero_count = 0;
    let inv_vals: DVector<f64> = eig
        .eigenvalues
        .map(|x| if x.abs() <= tol { 0.0 } else { 1.0 / x });
    for x in eig.eigenvalues.iter() {
        if x.abs() <= tol {
            zero_count += 1;
        }
    }
    if let Some(err) = on_kernel(zero_count) {
        return Err(err);
    }
    // V * diag(1/lambda) * V^T, skipping the nulled directions
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&inv_vals);
    let mut out = scaled * v.transpose();
    // enforce exact symmetry against rounding drift
    for i in 0..out.nrows() {
        for j in (i + 1)..out.ncols() {
            let s = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a symmetric matrix, pairs sorted by descending eigenvalue.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Solve A X = I by one LU factorization reused for all columns.
pub fn lu_inverse(a: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let lu = a.clone().lu();
    lu.solve(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::SingularSystem(context.to_string()))
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest |a - b| over all entries.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

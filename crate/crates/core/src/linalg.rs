//! Thin wrappers over faer's dense factorizations.
//!
//! faer is built without its rayon feature, so every factorization here runs
//! sequentially and is bitwise reproducible.

use crate::error::{Error, Result};
use faer::{Mat, Side};

pub(crate) fn numerical_error(message: &str, m: &Mat<f64>) -> Error {
    let n = m.nrows().min(m.ncols());
    let diag = (0..n).map(|i| m[(i, i)]);
    let min_diag = diag.clone().fold(f64::INFINITY, f64::min);
    let max_diag = diag.fold(f64::NEG_INFINITY, f64::max);
    Error::Numerical {
        message: message.to_string(),
        dim: m.nrows(),
        min_diag,
        max_diag,
    }
}

/// Symmetric eigendecomposition `A = U diag(λ) Uᵀ`, eigenvalues ascending.
pub(crate) fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| numerical_error("symmetric eigensolve did not converge", a))?;
    let s = evd.S();
    let values = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub(crate) fn cholesky_lower(a: &Mat<f64>) -> Result<Mat<f64>> {
    let llt = a
        .llt(Side::Lower)
        .map_err(|e| numerical_error(&format!("Cholesky factorization failed: {e}"), a))?;
    Ok(llt.L().to_owned())
}

/// Solves `A x = b` for symmetric positive-definite `A` by Cholesky.
pub(crate) fn spd_solve(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky_lower(a)?;
    let n = b.len();
    // forward: L z = b
    let mut z = b.to_vec();
    for i in 0..n {
        let mut acc = z[i];
        for k in 0..i {
            acc -= l[(i, k)] * z[k];
        }
        z[i] = acc / l[(i, i)];
    }
    // backward: Lᵀ x = z
    for i in (0..n).rev() {
        let mut acc = z[i];
        for k in i + 1..n {
            acc -= l[(k, i)] * z[k];
        }
        z[i] = acc / l[(i, i)];
    }
    Ok(z)
}

/// `M v` for a dense matrix.
pub(crate) fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), v.len());
    let mut out = vec![0.0; m.nrows()];
    // column-major storage: accumulate column by column
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (o, &mij) in out.iter_mut().zip(col.iter()) {
            *o += mij * vj;
        }
    }
    out
}

/// `Mᵀ v` for a dense matrix.
pub(crate) fn mat_t_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.nrows(), v.len());
    (0..m.ncols())
        .map(|j| m.col(j).iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_solve_small() {
        let a = Mat::from_fn(2, 2, |i, j| [[4.0, 1.0], [1.0, 3.0]][i][j]);
        let x = spd_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_fn(2, 2, |i, j| [[1.0, 2.0], [2.0, 1.0]][i][j]);
        assert!(matches!(cholesky_lower(&a), Err(Error::Numerical { .. })));
    }

    #[test]
    fn eigen_reconstructs() {
        let a = Mat::from_fn(3, 3, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let (vals, u) = symmetric_eigen(&a).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..3 {
            for j in 0..3 {
                let r: f64 = (0..3).map(|k| u[(i, k)] * vals[k] * u[(j, k)]).sum();
                assert!((r - a[(i, j)]).abs() < 1e-14);
            }
        }
    }
}

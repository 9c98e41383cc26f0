//! Dense linear-algebra helpers on top of nalgebra's SVD.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Singular values in decreasing order (empty for an empty matrix).
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    DVector::from_vec(s)
}

/// `‖m‖₂`.
pub fn spectral_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    singular_values(m).iter().copied().fold(0.0, f64::max)
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn min_singular_value<T: Scalar>(m: &DMatrix<T>) -> f64 {
    singular_values(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// Number of singular values above `rel_tol·σ_max`.
pub fn numerical_rank<T: Scalar>(m: &DMatrix<T>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values not above `cutoff` (absolute).
pub fn min_norm_solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, cutoff: f64) -> Result<DMatrix<T>> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            op: "least-squares right-hand side",
            expected: (a.nrows(), b.ncols()),
            found: b.shape(),
        });
    }
    if a.ncols() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(a.ncols(), b.ncols()));
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, cutoff).map_err(Error::InvalidArgument)
}

/// Copy `src` into `dst` with its top-left corner at `(r, c)`.
pub fn set_block<T: Scalar>(dst: &mut DMatrix<T>, r: usize, c: usize, src: &DMatrix<T>) {
    dst.view_mut((r, c), src.shape()).copy_from(src);
}

/// Column-major `vec(m)`.
pub fn vec_of<T: Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec<T: Scalar>(v: &[T], rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(rows, cols, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn svd_helpers() {
        let m = dmatrix![3.0, 0.0; 0.0, 4.0; 0.0, 0.0];
        assert_eq!(singular_values(&m).as_slice(), &[4.0, 3.0]);
        assert_eq!(spectral_norm(&m), 4.0);
        assert_eq!(min_singular_value(&m), 3.0);
        assert_eq!(numerical_rank(&dmatrix![1.0, 1.0; 1.0, 1.0], 1e-12), 1);
    }

    #[test]
    fn min_norm_underdetermined() {
        let a = dmatrix![1.0, 1.0];
        let x = min_norm_solve(&a, &dmatrix![2.0], 1e-12).unwrap();
        assert!((x - dmatrix![1.0; 1.0]).norm() < 1e-15);
    }
}

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Solves a dense complex system with partial-pivoting LU. Returns `None`
/// when the factorization hits an exactly zero pivot or produces non-finite values.
pub fn solve_dense(matrix: DMatrix<Complex64>, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let b = DVector::from_column_slice(rhs);
    let x = matrix.lu().solve(&b)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

/// `max_i |(A x - b)_i|`.
pub fn residual_inf(matrix: &DMatrix<Complex64>, x: &[Complex64], rhs: &[Complex64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    let r = matrix * xv;
    r.iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

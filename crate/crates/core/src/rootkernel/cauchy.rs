use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::{residual_inf, solve_dense};
use crate::error::{Error, Result};

/// Relative spacing below which the closed-form inverse is skipped.
pub const NEAR_COINCIDENT: f64 = 1e-6;

const AGREEMENT_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;

/// Coefficients `C_k` solving `sum_k C_k / (alpha_j - r_k) = rhs_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySolution {
    pub coeffs: Vec<Complex64>,
    pub closed_form: Option<Vec<Complex64>>,
    pub direct: Vec<Complex64>,
    /// Relative max-norm difference between the two routes (0 when only one ran).
    pub agreement: f64,
    /// Normwise relative residual of the direct solve.
    pub residual: f64,
    pub warning: Option<String>,
}

/// Closed-form inverse obtained by interpolating the numerator of
/// `f(z) = sum_k C_k/(z - r_k)` at the nodes `alpha_j` and reading off residues.
pub fn cauchy_closed_form(alphas: &[f64], roots: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = alphas.len();
    // weights_j = rhs_j prod_i (alpha_j - r_i) / prod_{i != j} (alpha_j - alpha_i)
    let weights: Vec<Complex64> = (0..n)
        .map(|j| {
            let mut num = rhs[j];
            for r in roots {
                num *= Complex64::new(alphas[j], 0.0) - r;
            }
            let den: f64 = (0..n)
                .filter(|&i| i != j)
                .map(|i| alphas[j] - alphas[i])
                .product();
            num / den
        })
        .collect();
    roots
        .iter()
        .enumerate()
        .map(|(k, rk)| {
            let mut p = Complex64::new(0.0, 0.0);
            for (j, wj) in weights.iter().enumerate() {
                let mut term = *wj;
                for (i, a) in alphas.iter().enumerate() {
                    if i != j {
                        term *= rk - a;
                    }
                }
                p += term;
            }
            let den: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != k)
                .map(|(_, rm)| rk - rm)
                .product();
            p / den
        })
        .collect()
}

fn min_spacing<T: Copy>(xs: &[T], dist: impl Fn(T, T) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            best = best.min(dist(xs[i], xs[j]));
        }
    }
    best
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves the Cauchy system by LU and, when the nodes are well separated,
/// by the closed-form inverse as a cross-check.
pub fn solve_cauchy_system(
    alphas: &[f64],
    roots: &[Complex64],
    rhs: &[Complex64],
) -> Result<CauchySolution> {
    let n = alphas.len();
    assert_eq!(roots.len(), n, "one root per node");
    assert_eq!(rhs.len(), n, "one right-hand side per node");
    let matrix = DMatrix::from_fn(n, n, |j, k| (Complex64::new(alphas[j], 0.0) - roots[k]).inv());
    let direct = solve_dense(matrix.clone(), rhs).ok_or(Error::SingularSystem { size: n })?;
    let matrix_norm = matrix
        .row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let scale = matrix_norm * max_norm(&direct) + max_norm(rhs);
    let residual = if scale > 0.0 {
        residual_inf(&matrix, &direct, rhs) / scale
    } else {
        0.0
    };
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::SingularSystem { size: n });
    }

    let unit = alphas.iter().copied().fold(0.0, f64::max);
    let spacing = min_spacing(alphas, |a, b| (a - b).abs())
        .min(min_spacing(roots, |a, b| (a - b).norm()))
        / unit;
    if spacing < NEAR_COINCIDENT {
        return Ok(CauchySolution {
            coeffs: direct.clone(),
            closed_form: None,
            direct,
            agreement: 0.0,
            residual,
            warning: Some(format!(
                "nodes nearly coincide (relative spacing {spacing:e}); closed-form inverse skipped"
            )),
        });
    }
    let closed = cauchy_closed_form(alphas, roots, rhs);
    let denom = max_norm(&direct).max(f64::MIN_POSITIVE);
    let agreement = closed
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / denom;
    if !(agreement <= AGREEMENT_TOL) {
        return Err(Error::CauchyMismatch { relative: agreement });
    }
    Ok(CauchySolution {
        coeffs: direct.clone(),
        closed_form: Some(closed),
        direct,
        agreement,
        residual,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_by_one() {
        let sol = solve_cauchy_system(&[2.0], &[c(0.5, 0.0)], &[c(3.0, 0.0)]).unwrap();
        assert!((sol.coeffs[0] - c(4.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn closed_form_inverts_matrix() {
        let alphas = [0.5, 1.5, 4.0];
        let roots = [c(0.2, 0.0), c(1.0, 0.3), c(1.0, -0.3)];
        let rhs = [c(1.0, 0.0), c(-2.0, 0.0), c(0.25, 0.0)];
        let closed = cauchy_closed_form(&alphas, &roots, &rhs);
        for j in 0..3 {
            let lhs: Complex64 = (0..3).map(|k| closed[k] / (c(alphas[j], 0.0) - roots[k])).sum();
            assert!((lhs - rhs[j]).norm() < 1e-12);
        }
        let sol = solve_cauchy_system(&alphas, &roots, &rhs).unwrap();
        assert!(sol.agreement < 1e-12);
        assert!(sol.warning.is_none());
    }

    #[test]
    fn near_coincident_roots_fall_back_to_direct() {
        let alphas = [1.0, 3.0];
        let roots = [c(0.5, 0.0), c(0.5 + 1e-9, 0.0)];
        let rhs = [c(1.0, 0.0), c(2.0, 0.0)];
        match solve_cauchy_system(&alphas, &roots, &rhs) {
            Ok(sol) => {
                assert!(sol.closed_form.is_none());
                assert!(sol.warning.is_some());
            }
            Err(e) => assert!(matches!(e, Error::SingularSystem { .. })),
        }
    }
}

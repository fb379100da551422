//! Root localization for the lattice characteristic polynomial and the
//! generalized Lundberg equation, plus the Cauchy-matrix coefficient solves.

pub mod aberth;
mod cauchy;
pub(crate) mod linalg;
pub mod poly;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{scale_comb_exp, CombExp};
use aberth::{aberth_roots, polish};
use poly::{dense, SparsePoly};

pub use cauchy::{cauchy_closed_form, solve_cauchy_system, CauchySolution, NEAR_COINCIDENT};

/// Tolerances shared by the root finders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Residual bound relative to the largest coefficient magnitude.
    pub residual_tol: f64,
    /// Width of the excluded band around the unit circle (or the imaginary axis).
    pub boundary_eps: f64,
    /// Tolerance for pairing a root with its conjugate.
    pub conjugate_tol: f64,
    /// Roots closer than this are treated as a multiple root.
    pub repeat_tol: f64,
    pub max_iter: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            boundary_eps: 1e-9,
            conjugate_tol: 1e-9,
            repeat_tol: 1e-7,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    UnitDiskInterior,
    RightHalfPlane,
}

/// Roots of a real-coefficient equation restricted to a region.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    roots: Vec<Complex64>,
    residuals: Vec<f64>,
    region: Region,
    expected_count: usize,
}

impl RootSet {
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn expected_count(&self) -> usize {
        self.expected_count
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Largest distance from a root's conjugate to its nearest member,
    /// relative to `max(1, |r|)`.
    pub fn conjugate_defect(&self) -> f64 {
        conjugate_defect(&self.roots)
    }
}

pub(crate) fn conjugate_defect(roots: &[Complex64]) -> f64 {
    roots
        .iter()
        .map(|r| {
            let c = r.conj();
            roots
                .iter()
                .map(|s| (c - s).norm())
                .fold(f64::INFINITY, f64::min)
                / r.norm().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Pairs every root with its conjugate and replaces each pair by an exactly
/// conjugate pair; near-real roots become real.
fn symmetrize(roots: Vec<Complex64>, tol: f64) -> Result<Vec<Complex64>> {
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for r in roots {
        let scale = r.norm().max(1.0);
        if r.im.abs() <= tol * scale {
            real.push(Complex64::new(r.re, 0.0));
        } else if r.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::ConjugateClosure {
            defect: f64::INFINITY,
        });
    }
    let mut used = vec![false; lower.len()];
    let mut out = real;
    for z in upper {
        let (best, dist) = lower
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, l)| (j, (z.conj() - l).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if best == usize::MAX || dist > tol * z.norm().max(1.0) {
            return Err(Error::ConjugateClosure { defect: dist });
        }
        used[best] = true;
        let avg = (z + lower[best].conj()) * 0.5;
        out.push(avg);
        out.push(avg.conj());
    }
    Ok(out)
}

/// Replaces the coefficient of each conjugate pair by the exact conjugate of
/// the pair average; coefficients of real roots become real.
pub(crate) fn conjugate_symmetric(roots: &[Complex64], mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
    let n = roots.len();
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        done[i] = true;
        if roots[i].im == 0.0 {
            coeffs[i].im = 0.0;
            continue;
        }
        if let Some(j) = (0..n).find(|&j| !done[j] && roots[j] == roots[i].conj()) {
            let avg = (coeffs[i] + coeffs[j].conj()) * 0.5;
            coeffs[i] = avg;
            coeffs[j] = avg.conj();
            done[j] = true;
        }
    }
    coeffs
}

fn min_pairwise_distance(roots: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

fn sort_by_argument(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        a.arg()
            .total_cmp(&b.arg())
            .then(a.norm().total_cmp(&b.norm()))
    });
}

/// The lattice characteristic polynomial `lambda x^b - (lambda + mu_d + 1/t) x^w + mu_d`.
pub fn char_poly(lambda: f64, mu_d: f64, t: f64, b: u64, w: u64) -> SparsePoly {
    let k = lambda + mu_d + 1.0 / t;
    SparsePoly::new(vec![(0, mu_d), (w, -k), (b, lambda)])
}

/// Returns the `w` roots of the characteristic polynomial strictly inside the
/// unit disk. All `b` roots are located simultaneously and the interior count
/// is checked against the Rouché count `w`.
pub fn char_poly_roots(
    lambda: f64,
    mu_d: f64,
    t: f64,
    b: u64,
    w: u64,
    cfg: &RootConfig,
) -> Result<RootSet> {
    if w < 1 || b <= w {
        return Err(invalid("b", format!("need b > w >= 1, got b = {b}, w = {w}")));
    }
    for (name, v) in [("lambda", lambda), ("mu_d", mu_d), ("t", t)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, format!("must be finite and > 0, got {v}")));
        }
    }
    let poly = char_poly(lambda, mu_d, t, b, w);
    let out = aberth_roots(&poly, 4.0 * f64::EPSILON, cfg.max_iter)?;
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
        });
    }
    let mut interior = Vec::with_capacity(w as usize);
    for r in out.roots {
        let m = r.norm();
        if (m - 1.0).abs() <= cfg.boundary_eps {
            return Err(Error::Degenerate { modulus: m });
        }
        if m < 1.0 {
            interior.push(polish(&poly, r, 2));
        }
    }
    if interior.len() != w as usize {
        return Err(Error::RootCountMismatch {
            expected: w as usize,
            found: interior.len(),
            region: "unit disk",
        });
    }
    let spacing = min_pairwise_distance(&interior);
    if spacing < cfg.repeat_tol {
        return Err(Error::RepeatedRoot { distance: spacing });
    }
    let mut interior = symmetrize(interior, cfg.conjugate_tol)?;
    sort_by_argument(&mut interior);
    let scale = poly.max_abs_coeff();
    let residuals: Vec<f64> = interior.iter().map(|z| poly.eval(*z).norm() / scale).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst >= cfg.residual_tol {
        return Err(Error::ResidualTooLarge {
            residual: worst,
            tol: cfg.residual_tol,
        });
    }
    Ok(RootSet {
        roots: interior,
        residuals,
        region: Region::UnitDiskInterior,
        expected_count: w as usize,
    })
}

/// Left-hand side of the generalized Lundberg equation
/// `lambda sum A_i beta_i/(beta_i + r) + mu_d sum A_i alpha_i/(alpha_i - r) - (lambda + mu_d + 1/t)`.
pub fn lundberg_function(
    lambda: f64,
    mu_d: f64,
    t: f64,
    w_law: &CombExp,
    b_law: &CombExp,
    r: Complex64,
) -> Complex64 {
    let up: Complex64 = b_law
        .weights()
        .iter()
        .zip(b_law.rates())
        .map(|(a, beta)| a * beta / (r + beta))
        .sum();
    let down: Complex64 = w_law
        .weights()
        .iter()
        .zip(w_law.rates())
        .map(|(a, alpha)| a * alpha / (alpha - r))
        .sum();
    up * lambda + down * mu_d - (lambda + mu_d + 1.0 / t)
}

/// Relative residual of the Lundberg equation, using the form with the
/// constant terms cancelled through `sum A_i = 1`:
/// `r (mu_d sum A_i/(alpha_i - r) - lambda sum A_i/(beta_i + r)) - 1/t`.
fn lundberg_relative_residual(
    lambda: f64,
    mu_d: f64,
    t: f64,
    w_law: &CombExp,
    b_law: &CombExp,
    r: Complex64,
) -> f64 {
    let mut down = Complex64::new(0.0, 0.0);
    let mut down_abs = 0.0;
    for (a, alpha) in w_law.weights().iter().zip(w_law.rates()) {
        let term = *a / (alpha - r);
        down += term;
        down_abs += term.norm();
    }
    let mut up = Complex64::new(0.0, 0.0);
    let mut up_abs = 0.0;
    for (a, beta) in b_law.weights().iter().zip(b_law.rates()) {
        let term = *a / (r + beta);
        up += term;
        up_abs += term.norm();
    }
    let g = r * (down * mu_d - up * lambda) - 1.0 / t;
    let scale = r.norm() * (mu_d * down_abs + lambda * up_abs) + 1.0 / t;
    g.norm() / scale
}

/// Clears the denominators of the Lundberg equation. The result has degree `2n`:
/// `mu_d r sum_i A_i prod_j (beta_j + r) prod_{k != i} (alpha_k - r)
///  - lambda r sum_i A_i prod_{j != i} (beta_j + r) prod_k (alpha_k - r)
///  - (1/t) prod_j (beta_j + r) prod_k (alpha_k - r)`.
pub fn lundberg_polynomial(
    lambda: f64,
    mu_d: f64,
    t: f64,
    w_law: &CombExp,
    b_law: &CombExp,
) -> SparsePoly {
    let alphas = w_law.rates();
    let betas = b_law.rates();
    let n = alphas.len();
    let beta_factor = |skip: Option<usize>| {
        dense::product_of_linear(
            betas
                .iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != skip)
                .map(|(_, b)| (*b, 1.0)),
        )
    };
    let alpha_factor = |skip: Option<usize>| {
        dense::product_of_linear(
            alphas
                .iter()
                .enumerate()
                .filter(|(k, _)| Some(*k) != skip)
                .map(|(_, a)| (*a, -1.0)),
        )
    };
    let mut acc = Vec::new();
    for i in 0..n {
        let down = dense::mul(&beta_factor(None), &alpha_factor(Some(i)));
        dense::add_scaled(&mut acc, &dense::mul(&[0.0, 1.0], &down), mu_d * w_law.weights()[i]);
        let up = dense::mul(&beta_factor(Some(i)), &alpha_factor(None));
        dense::add_scaled(&mut acc, &dense::mul(&[0.0, 1.0], &up), -lambda * b_law.weights()[i]);
    }
    let full = dense::mul(&beta_factor(None), &alpha_factor(None));
    dense::add_scaled(&mut acc, &full, -1.0 / t);
    SparsePoly::from_dense(&acc)
}

/// Returns the `n` roots with positive real part of the generalized Lundberg
/// equation for down-jumps `W` and up-jumps `a W`.
pub fn lundberg_roots(
    lambda: f64,
    mu_d: f64,
    t: f64,
    w_law: &CombExp,
    a: f64,
    cfg: &RootConfig,
) -> Result<RootSet> {
    for (name, v) in [("lambda", lambda), ("mu_d", mu_d), ("t", t)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, format!("must be finite and > 0, got {v}")));
        }
    }
    let b_law = scale_comb_exp(w_law, a)?;
    let n = w_law.order();
    let poly = lundberg_polynomial(lambda, mu_d, t, w_law, &b_law);
    if poly.degree() as usize != 2 * n {
        return Err(Error::RootCountMismatch {
            expected: 2 * n,
            found: poly.degree() as usize,
            region: "Lundberg polynomial degree",
        });
    }
    let out = aberth_roots(&poly, 4.0 * f64::EPSILON, cfg.max_iter)?;
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.iterations,
        });
    }
    let alphas = w_law.rates();
    let scale = alphas[n - 1];
    let mut right = Vec::with_capacity(n);
    for r in out.roots {
        let r = polish(&poly, r, 2);
        if r.re.abs() <= cfg.boundary_eps * scale {
            return Err(Error::Degenerate { modulus: r.norm() });
        }
        if r.re > 0.0 {
            right.push(r);
        }
    }
    if right.len() != n {
        return Err(Error::RootCountMismatch {
            expected: n,
            found: right.len(),
            region: "right half-plane",
        });
    }
    for r in &right {
        for alpha in alphas {
            if (r - alpha).norm() <= cfg.boundary_eps * alpha {
                return Err(Error::PoleCollision {
                    root: format!("{r}"),
                    pole: *alpha,
                });
            }
        }
    }
    if n > 1 {
        let spacing = min_pairwise_distance(&right);
        if spacing < cfg.repeat_tol * scale {
            return Err(Error::RepeatedRoot { distance: spacing });
        }
    }
    let mut right = symmetrize(right, cfg.conjugate_tol)?;
    right.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let residuals: Vec<f64> = right
        .iter()
        .map(|r| lundberg_relative_residual(lambda, mu_d, t, w_law, &b_law, *r))
        .collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst >= cfg.residual_tol {
        return Err(Error::ResidualTooLarge {
            residual: worst,
            tol: cfg.residual_tol,
        });
    }
    Ok(RootSet {
        roots: right,
        residuals,
        region: Region::RightHalfPlane,
        expected_count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_case_matches_closed_form() {
        let set = char_poly_roots(1.0, 1.0, 1.0, 2, 1, &RootConfig::default()).unwrap();
        assert_eq!(set.len(), 1);
        let x = set.roots()[0];
        assert_eq!(x.im, 0.0);
        assert_relative_eq!(x.re, (3.0 - 5f64.sqrt()) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn small_example_has_w_interior_roots() {
        let set = char_poly_roots(10.0, 90.0, 1.0, 100, 9, &RootConfig::default()).unwrap();
        assert_eq!(set.len(), 9);
        assert_eq!(set.region(), Region::UnitDiskInterior);
        assert!(set.roots().iter().all(|r| r.norm() < 1.0));
        assert!(set.conjugate_defect() < 1e-9);
        assert!(set.max_residual() < 1e-8);
    }

    #[test]
    fn rejects_bad_lattice() {
        let cfg = RootConfig::default();
        assert!(char_poly_roots(1.0, 1.0, 1.0, 2, 2, &cfg).is_err());
        assert!(char_poly_roots(1.0, 1.0, 1.0, 2, 0, &cfg).is_err());
        assert!(char_poly_roots(0.0, 1.0, 1.0, 3, 1, &cfg).is_err());
    }

    #[test]
    fn lundberg_exponential_root_solves_rational_form() {
        let w = CombExp::exponential(1.0 / 98.0).unwrap();
        let set = lundberg_roots(0.6, 5.4, 336.0, &w, 1000.0 / 98.0, &RootConfig::default()).unwrap();
        assert_eq!(set.len(), 1);
        let r = set.roots()[0];
        let b = w.scaled(1000.0 / 98.0).unwrap();
        assert!(lundberg_function(0.6, 5.4, 336.0, &w, &b, r).norm() < 1e-10);
        assert!(r.re > 0.0 && r.im == 0.0);
    }

    #[test]
    fn lundberg_rejects_unit_scale() {
        let w = CombExp::exponential(1.0).unwrap();
        let err = lundberg_roots(1.0, 1.0, 1.0, &w, 1.0, &RootConfig::default());
        assert!(matches!(err, Err(Error::InvalidParameter { name: "a", .. })));
    }

    #[test]
    fn lundberg_polynomial_vanishes_where_rational_form_does() {
        let w = CombExp::new(vec![0.4, 0.6], vec![1.0, 3.0]).unwrap();
        let b = w.scaled(4.0).unwrap();
        let poly = lundberg_polynomial(1.0, 2.0, 5.0, &w, &b);
        assert_eq!(poly.degree(), 4);
        // compare P(r) against F(r) * prod(beta + r) prod(alpha - r)
        for r in [Complex64::new(0.3, 0.1), Complex64::new(-0.7, 0.4)] {
            let f = lundberg_function(1.0, 2.0, 5.0, &w, &b, r);
            let denom: Complex64 = b
                .rates()
                .iter()
                .map(|x| r + x)
                .chain(w.rates().iter().map(|x| x - r))
                .product();
            let p = poly.eval(r);
            assert_relative_eq!(p.re, (f * denom).re, max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(p.im, (f * denom).im, max_relative = 1e-12, epsilon = 1e-14);
        }
    }
}

//! Aberth–Ehrlich simultaneous iteration for all roots of a polynomial.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::poly::SparsePoly;
use crate::error::{Error, Result};

/// Initial approximations placed on circles whose radii come from the upper
/// convex hull of `(k, ln|a_k|)` (Newton polygon).
pub fn initial_guesses(poly: &SparsePoly) -> Vec<Complex64> {
    let pts: Vec<(f64, f64)> = poly
        .terms()
        .iter()
        .map(|(k, a)| (*k as f64, a.abs().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point unless it lies strictly above the chord
            if (x2 - x1) * (p.1 - y1) - (y2 - y1) * (p.0 - x1) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let degree = poly.degree() as usize;
    let mut guesses = vec![Complex64::new(0.0, 0.0); poly.lowest_power() as usize];
    let sigma = 0.7;
    for (seg, pair) in hull.windows(2).enumerate() {
        let (x1, y1) = pair[0];
        let (x2, y2) = pair[1];
        let count = (x2 - x1).round() as usize;
        let radius = ((y1 - y2) / (x2 - x1)).exp();
        for j in 0..count {
            let angle = 2.0 * PI * (j as f64) / count as f64
                + 2.0 * PI * seg as f64 / degree.max(1) as f64
                + sigma;
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    guesses
}

/// Outcome of the iteration.
#[derive(Debug, Clone)]
pub struct AberthOutput {
    pub roots: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the Gauss–Seidel variant of the Aberth–Ehrlich iteration from the
/// Newton-polygon starting points. Each root is frozen once its correction
/// drops below `rel_tol * |z|`.
pub fn aberth_roots(poly: &SparsePoly, rel_tol: f64, max_iter: usize) -> Result<AberthOutput> {
    let degree = poly.degree() as usize;
    if degree == 0 {
        return Ok(AberthOutput {
            roots: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    let zero_roots = poly.lowest_power() as usize;
    let mut z = initial_guesses(poly);
    if z.len() != degree {
        return Err(Error::RootCountMismatch {
            expected: degree,
            found: z.len(),
            region: "initial guesses",
        });
    }
    let mut frozen = vec![false; degree];
    for f in frozen.iter_mut().take(zero_roots) {
        *f = true;
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut active = 0usize;
        for i in 0..degree {
            if frozen[i] {
                continue;
            }
            let zi = z[i];
            let ratio = poly.newton_ratio(zi);
            if ratio == Complex64::new(0.0, 0.0) {
                frozen[i] = true;
                continue;
            }
            if !ratio.is_finite() {
                // stationary point of p: nudge off it
                z[i] = zi * Complex64::from_polar(1.0 + 1e-3, 1e-3);
                active += 1;
                continue;
            }
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    repulsion += (zi - zj).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[i] = zi - step;
            if step.norm() <= rel_tol * z[i].norm().max(f64::MIN_POSITIVE) {
                frozen[i] = true;
            } else {
                active += 1;
            }
        }
        if active == 0 {
            converged = true;
            break;
        }
    }
    Ok(AberthOutput {
        roots: z,
        iterations,
        converged,
    })
}

/// A couple of plain Newton steps from an already accurate approximation.
pub fn polish(poly: &SparsePoly, z: Complex64, steps: usize) -> Complex64 {
    let mut z = z;
    for _ in 0..steps {
        let r = poly.newton_ratio(z);
        if !r.is_finite() {
            break;
        }
        let next = z - r;
        if (next - z).norm() == 0.0 {
            break;
        }
        z = next;
    }
    z
}

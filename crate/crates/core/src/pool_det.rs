//! Pool manager with deterministic block reward `b` and share reward `w` on
//! the integer lattice, evaluated at an exponentially distributed horizon.
//!
//! Both `V(u,t)` and `psi(u,t)` are combinations `sum_i c_i x_i^u` over the
//! `w` roots of the characteristic polynomial inside the unit disk, plus the
//! affine particular solution `u + d_0` in the value case. The coefficients
//! come from the `w` boundary equations at `u = 0, ..., w-1`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{PoolParams, SolutionKind};
use crate::rootkernel::linalg::{residual_inf, solve_dense};
use crate::rootkernel::poly::{cpow, CompensatedSum};
use crate::rootkernel::{
    char_poly_roots, conjugate_defect, conjugate_symmetric, RootConfig, RootSet,
};

/// Imaginary parts above this (relative to `1 + |value|`) signal a broken solution.
pub const REALNESS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DetPoolSolution {
    roots: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    drift: f64,
    kind: SolutionKind,
    b: u64,
    w: u64,
    system_residual: f64,
    warning: Option<String>,
}

impl DetPoolSolution {
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    /// `d_0 = lambda b t - (lambda + mu_d) w t`; zero for the ruin probability.
    pub fn drift(&self) -> f64 {
        self.drift
    }
    pub fn kind(&self) -> SolutionKind {
        self.kind
    }
    pub fn jumps(&self) -> (u64, u64) {
        (self.b, self.w)
    }
    /// Max-norm residual of the boundary system.
    pub fn system_residual(&self) -> f64 {
        self.system_residual
    }
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Complex sum `sum_i c_i x_i^u` plus the affine part, before discarding
    /// the imaginary component. Useful to check realness.
    pub fn eval_complex(&self, u: i64) -> Complex64 {
        if u < 0 {
            return Complex64::new(self.below_zero(), 0.0);
        }
        let mut acc = CompensatedSum::default();
        for (c, x) in self.coeffs.iter().zip(&self.roots) {
            acc.add(c * cpow(*x, u as u64));
        }
        let mut v = acc.value();
        if self.kind == SolutionKind::Value {
            v += u as f64 + self.drift;
        }
        v
    }

    /// Value at an integer capital.
    pub fn eval_int(&self, u: i64) -> f64 {
        self.eval_complex(u).re
    }

    /// Value at capital `u`, which must be an integer.
    pub fn eval(&self, u: f64) -> Result<f64> {
        if !u.is_finite() || u.fract() != 0.0 {
            return Err(Error::NonIntegerCapital(u));
        }
        Ok(self.eval_int(u as i64))
    }

    fn below_zero(&self) -> f64 {
        match self.kind {
            SolutionKind::Value => 0.0,
            SolutionKind::RuinProb => 1.0,
        }
    }

    /// Copy with every coefficient scaled by `1 + rel`; used as a negative control.
    pub fn perturbed(&self, rel: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= 1.0 + rel;
        }
        out
    }
}

fn validate(params: &PoolParams) -> Result<(u64, u64)> {
    params.lattice_jumps()
}

fn solve(params: &PoolParams, kind: SolutionKind, cfg: &RootConfig) -> Result<DetPoolSolution> {
    let (b, w) = validate(params)?;
    let (lambda, mu_d, t) = (params.lambda(), params.mu_d(), params.t());
    let set: RootSet = char_poly_roots(lambda, mu_d, t, b, w, cfg)?;
    let roots = set.roots().to_vec();
    let k = params.killing_rate();
    let n = w as usize;
    let matrix = DMatrix::from_fn(n, n, |j, i| {
        let x = roots[i];
        cpow(x, b - w + j as u64) * lambda - cpow(x, j as u64) * k
    });
    let drift = match kind {
        SolutionKind::Value => lambda * params.b() * t - (lambda + mu_d) * params.w() * t,
        SolutionKind::RuinProb => 0.0,
    };
    let rhs: Vec<Complex64> = (0..n)
        .map(|j| {
            let v = match kind {
                SolutionKind::Value => j as f64 * mu_d + mu_d * drift - mu_d * params.w(),
                SolutionKind::RuinProb => -mu_d,
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    let raw = solve_dense(matrix.clone(), &rhs).ok_or(Error::SingularSystem { size: n })?;
    let coeffs = conjugate_symmetric(&roots, raw);
    let system_residual = residual_inf(&matrix, &coeffs, &rhs);
    let scale = rhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if !(system_residual <= 1e-8 * scale) {
        return Err(Error::SingularSystem { size: n });
    }
    let warning = (w == 1).then(|| {
        "w = 1: the boundary data reduce to the single equation at u = 0".to_string()
    });
    debug_assert!(conjugate_defect(&roots) == 0.0);
    Ok(DetPoolSolution {
        roots,
        coeffs,
        drift,
        kind,
        b,
        w,
        system_residual,
        warning,
    })
}

/// `V(u,t)` for the lattice model.
pub fn solve_v_hat_det(params: &PoolParams) -> Result<DetPoolSolution> {
    solve(params, SolutionKind::Value, &RootConfig::default())
}

/// `psi(u,t)` for the lattice model.
pub fn solve_psi_hat_det(params: &PoolParams) -> Result<DetPoolSolution> {
    solve(params, SolutionKind::RuinProb, &RootConfig::default())
}

/// As [`solve_v_hat_det`] / [`solve_psi_hat_det`] with explicit root tolerances.
pub fn solve_det_with(
    params: &PoolParams,
    kind: SolutionKind,
    cfg: &RootConfig,
) -> Result<DetPoolSolution> {
    solve(params, kind, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionReport {
    /// Largest absolute residual of the difference equation.
    pub max_residual: f64,
    /// Largest residual divided by `1 + |value|`.
    pub max_scaled: f64,
    pub worst_u: i64,
    /// Largest imaginary part met while evaluating.
    pub max_imag: f64,
    pub passed: bool,
}

/// Relative residual bound for the difference equation.
pub const RECURSION_TOL: f64 = 1e-6;

/// Checks `lambda V(u+b-w) - K V(u) + mu_d V(u-w) + u/t = 0` (no `u/t` term
/// for the ruin probability) at every integer `u` in `[0, u_max]`, with the
/// boundary values `V = 0` / `psi = 1` below zero.
pub fn verify_recursion_det(
    sol: &DetPoolSolution,
    params: &PoolParams,
    u_max: u64,
) -> RecursionReport {
    let (b, w) = (sol.b as i64, sol.w as i64);
    let lambda = params.lambda();
    let mu_d = params.mu_d();
    let k = params.killing_rate();
    let t = params.t();
    let mut report = RecursionReport {
        max_residual: 0.0,
        max_scaled: 0.0,
        worst_u: 0,
        max_imag: 0.0,
        passed: true,
    };
    for u in 0..=u_max as i64 {
        let up = sol.eval_complex(u + b - w);
        let here = sol.eval_complex(u);
        let down = sol.eval_complex(u - w);
        for z in [up, here, down] {
            report.max_imag = report.max_imag.max(z.im.abs() / (1.0 + z.re.abs()));
        }
        let forcing = match sol.kind {
            SolutionKind::Value => u as f64 / t,
            SolutionKind::RuinProb => 0.0,
        };
        let r = (lambda * up.re - k * here.re + mu_d * down.re + forcing).abs();
        let scaled = r / (1.0 + here.re.abs());
        if scaled > report.max_scaled {
            report.max_scaled = scaled;
            report.worst_u = u;
        }
        report.max_residual = report.max_residual.max(r);
    }
    report.passed = report.max_scaled < RECURSION_TOL && report.max_imag < REALNESS_TOL;
    report
}

/// Smallest integer capital with `psi(u,t) < level`, assuming `psi` is
/// nonincreasing. Returns `None` when no capital up to `u_cap` qualifies.
pub fn ruin_capital_threshold(sol: &DetPoolSolution, level: f64, u_cap: u64) -> Option<u64> {
    if sol.kind != SolutionKind::RuinProb {
        return None;
    }
    let below = |u: u64| sol.eval_int(u as i64) < level;
    if below(0) {
        return Some(0);
    }
    let mut hi = 1u64;
    while !below(hi) {
        if hi >= u_cap {
            return None;
        }
        hi = (hi * 2).min(u_cap);
    }
    let mut lo = hi / 2;
    // invariant: !below(lo), below(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny() -> PoolParams {
        PoolParams::from_rates(1.0, 1.0, 2.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn one_root_ruin_probability_by_hand() {
        let sol = solve_psi_hat_det(&tiny()).unwrap();
        let x = (3.0 - 5f64.sqrt()) / 2.0;
        // lambda c x - 3 c + mu_d = 0
        let c = 1.0 / (3.0 - x);
        for u in 0..6 {
            assert_relative_eq!(sol.eval_int(u), c * x.powi(u as i32), max_relative = 1e-13);
        }
        assert_eq!(sol.eval_int(-1), 1.0);
        assert!(sol.warning().is_some());
    }

    #[test]
    fn boundary_values_below_zero() {
        let v = solve_v_hat_det(&tiny()).unwrap();
        assert_eq!(v.eval_int(-3), 0.0);
        assert_eq!(v.eval(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn non_integer_capital_is_rejected() {
        let v = solve_v_hat_det(&tiny()).unwrap();
        assert_eq!(v.eval(2.5), Err(Error::NonIntegerCapital(2.5)));
    }

    #[test]
    fn non_integer_jumps_are_rejected() {
        let p = PoolParams::from_rates(1.0, 1.0, 2.0, 0.5, 0.0, 1.0).unwrap();
        assert!(solve_v_hat_det(&p).is_err());
    }

    #[test]
    fn small_example_value_approaches_drift() {
        let p = PoolParams::from_rates(10.0, 90.0, 100.0, 9.0, 0.0, 1.0).unwrap();
        let v = solve_v_hat_det(&p).unwrap();
        assert_relative_eq!(v.drift(), 100.0, max_relative = 1e-14);
        // V is nondecreasing everywhere; V - u only along whole multiples of w,
        // since capital inside one w-block does not change which jumps ruin.
        let mut prev = f64::NEG_INFINITY;
        for u in 0..400 {
            let value = v.eval_int(u);
            assert!(value >= prev - 1e-9, "V decreased at u = {u}");
            prev = value;
        }
        let mut prev = f64::NEG_INFINITY;
        for u in (0..400).step_by(9) {
            let excess = v.eval_int(u) - u as f64;
            assert!(excess >= prev - 1e-9, "V - u decreased at u = {u}");
            prev = excess;
        }
        assert!((v.eval_int(5000) - 5000.0 - 100.0).abs() < 1e-6);
        let rep = verify_recursion_det(&v, &p, 500);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn perturbed_solution_fails_recursion() {
        let p = PoolParams::from_rates(10.0, 90.0, 100.0, 9.0, 0.0, 1.0).unwrap();
        let psi = solve_psi_hat_det(&p).unwrap();
        assert!(verify_recursion_det(&psi, &p, 200).passed);
        let bad = psi.perturbed(1e-3);
        let rep = verify_recursion_det(&bad, &p, 200);
        assert!(!rep.passed);
        assert!(rep.max_scaled > 1e-4);
    }

    #[test]
    fn threshold_search_on_small_example() {
        let p = PoolParams::from_rates(10.0, 90.0, 100.0, 9.0, 0.0, 1.0).unwrap();
        let psi = solve_psi_hat_det(&p).unwrap();
        let u = ruin_capital_threshold(&psi, 0.05, 1 << 20).unwrap();
        assert!(psi.eval_int(u as i64) < 0.05);
        assert!(psi.eval_int(u as i64 - 1) >= 0.05);
    }
}

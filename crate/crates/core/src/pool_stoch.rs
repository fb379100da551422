//! Pool manager with random rewards: share rewards `W` drawn from a
//! combination of exponentials and block rewards `B_r = a W` in law.
//!
//! With `r_1, ..., r_n` the Lundberg roots of positive real part,
//!
//! ```text
//! V(u,t)   = sum_k C_k exp(-r_k u) + u + d_0,   d_0 = t sum_i A_i (lambda/beta_i - mu_d/alpha_i)
//! psi(u,t) = sum_k D_k exp(-r_k u)
//! ```
//!
//! where `C` and `D` solve Cauchy systems `sum_k C_k/(alpha_j - r_k) = B_j`.
//! The jump sizes `b` and `w` stored in [`PoolParams`] are not used here; the
//! jump laws come from `W` and the scale `a`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::model::{scale_comb_exp, CombExp, PoolParams, SolutionKind};
use crate::quad::integrate;
use crate::rootkernel::{
    conjugate_symmetric, lundberg_roots, solve_cauchy_system, CauchySolution, RootConfig, RootSet,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StochPoolSolution {
    roots: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    drift: f64,
    kind: SolutionKind,
    w_law: CombExp,
    b_law: CombExp,
    cauchy: CauchySolution,
    root_residual: f64,
}

impl StochPoolSolution {
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn drift(&self) -> f64 {
        self.drift
    }
    pub fn kind(&self) -> SolutionKind {
        self.kind
    }
    pub fn share_law(&self) -> &CombExp {
        &self.w_law
    }
    pub fn block_law(&self) -> &CombExp {
        &self.b_law
    }
    /// Diagnostics of the coefficient solve (closed form vs LU).
    pub fn cauchy(&self) -> &CauchySolution {
        &self.cauchy
    }
    pub fn warning(&self) -> Option<&str> {
        self.cauchy.warning.as_deref()
    }
    pub fn root_residual(&self) -> f64 {
        self.root_residual
    }

    pub fn eval_complex(&self, u: f64) -> Complex64 {
        if u < 0.0 {
            return Complex64::new(
                match self.kind {
                    SolutionKind::Value => 0.0,
                    SolutionKind::RuinProb => 1.0,
                },
                0.0,
            );
        }
        let mut sum: Complex64 = self
            .coeffs
            .iter()
            .zip(&self.roots)
            .map(|(c, r)| c * (-r * u).exp())
            .sum();
        if self.kind == SolutionKind::Value {
            sum += u + self.drift;
        }
        sum
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.eval_complex(u).re
    }

    /// Copy with coefficients scaled by `1 + rel` (negative control).
    pub fn perturbed(&self, rel: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= 1.0 + rel;
        }
        out
    }
}

fn solve(
    params: &PoolParams,
    w_law: &CombExp,
    a: f64,
    kind: SolutionKind,
    cfg: &RootConfig,
) -> Result<StochPoolSolution> {
    let (lambda, mu_d, t) = (params.lambda(), params.mu_d(), params.t());
    let b_law = scale_comb_exp(w_law, a)?;
    let set: RootSet = lundberg_roots(lambda, mu_d, t, w_law, a, cfg)?;
    let roots = set.roots().to_vec();
    let alphas = w_law.rates();
    let drift = match kind {
        SolutionKind::Value => {
            t * w_law
                .weights()
                .iter()
                .zip(alphas.iter().zip(b_law.rates()))
                .map(|(a_i, (alpha, beta))| a_i * (lambda / beta - mu_d / alpha))
                .sum::<f64>()
        }
        SolutionKind::RuinProb => 0.0,
    };
    let rhs: Vec<Complex64> = alphas
        .iter()
        .map(|alpha| {
            let v = match kind {
                SolutionKind::Value => 1.0 / (alpha * alpha) - drift / alpha,
                SolutionKind::RuinProb => 1.0 / alpha,
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    let cauchy = solve_cauchy_system(alphas, &roots, &rhs)?;
    let coeffs = conjugate_symmetric(&roots, cauchy.coeffs.clone());
    Ok(StochPoolSolution {
        roots,
        coeffs,
        drift,
        kind,
        w_law: w_law.clone(),
        b_law,
        cauchy,
        root_residual: set.max_residual(),
    })
}

/// `V(u,t)` for combination-of-exponentials rewards.
pub fn solve_v_hat_stoch(params: &PoolParams, w_law: &CombExp, a: f64) -> Result<StochPoolSolution> {
    solve(params, w_law, a, SolutionKind::Value, &RootConfig::default())
}

/// `psi(u,t)` for combination-of-exponentials rewards.
pub fn solve_psi_hat_stoch(
    params: &PoolParams,
    w_law: &CombExp,
    a: f64,
) -> Result<StochPoolSolution> {
    solve(params, w_law, a, SolutionKind::RuinProb, &RootConfig::default())
}

/// The `n = 1` case in closed form: `W ~ Exp(alpha)`, `B_r ~ Exp(beta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPoolClosedForm {
    pub lambda: f64,
    pub mu_d: f64,
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Positive root of `K r^2 + B r - alpha beta / t = 0`.
    pub r: f64,
}

impl ExpPoolClosedForm {
    pub fn new(lambda: f64, mu_d: f64, t: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda", lambda),
            ("mu_d", mu_d),
            ("t", t),
            ("alpha", alpha),
            ("beta", beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if beta >= alpha {
            return Err(invalid("beta", "block rewards must be larger in law: need beta < alpha"));
        }
        Ok(Self {
            lambda,
            mu_d,
            t,
            alpha,
            beta,
            r: exp_lundberg_root(lambda, mu_d, t, alpha, beta),
        })
    }

    pub fn drift(&self) -> f64 {
        self.t * (self.lambda / self.beta - self.mu_d / self.alpha)
    }

    pub fn v_hat(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        let a = self.alpha;
        let c = (1.0 / (a * a) - self.drift() / a) * (a - self.r);
        c * (-self.r * u).exp() + u + self.drift()
    }

    pub fn psi_hat(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 1.0;
        }
        (1.0 - self.r / self.alpha) * (-self.r * u).exp()
    }
}

/// Positive Lundberg root for exponential jumps. Clearing denominators gives
/// `K r^2 + ((mu_d + 1/t) beta - (lambda + 1/t) alpha) r - alpha beta / t = 0`.
pub fn exp_lundberg_root(lambda: f64, mu_d: f64, t: f64, alpha: f64, beta: f64) -> f64 {
    let k = lambda + mu_d + 1.0 / t;
    let b = (mu_d + 1.0 / t) * beta - (lambda + 1.0 / t) * alpha;
    let c = alpha * beta / t;
    let disc = (b * b + 4.0 * k * c).sqrt();
    if b > 0.0 {
        2.0 * c / (b + disc)
    } else {
        (disc - b) / (2.0 * k)
    }
}

/// Infinite-horizon ruin probability with exponential jumps,
/// `psi(u) = mu_d (1 + beta/alpha)/(lambda + mu_d) exp(-R u)` with
/// `R = (lambda alpha - mu_d beta)/(lambda + mu_d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfiniteHorizonPsi {
    pub at_zero: f64,
    pub rate: f64,
}

impl InfiniteHorizonPsi {
    pub fn eval(&self, u: f64) -> f64 {
        if u < 0.0 {
            1.0
        } else {
            self.at_zero * (-self.rate * u).exp()
        }
    }
}

pub fn psi_infinite_horizon_exp(
    lambda: f64,
    mu_d: f64,
    alpha: f64,
    beta: f64,
) -> Result<InfiniteHorizonPsi> {
    if lambda * alpha <= mu_d * beta {
        return Err(Error::NetProfitViolated(format!(
            "lambda alpha = {} <= mu_d beta = {}",
            lambda * alpha,
            mu_d * beta
        )));
    }
    Ok(InfiniteHorizonPsi {
        at_zero: mu_d * (1.0 + beta / alpha) / (lambda + mu_d),
        rate: (lambda * alpha - mu_d * beta) / (lambda + mu_d),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralReport {
    /// Largest residual relative to the sum of the absolute term sizes.
    pub max_relative: f64,
    pub worst_u: f64,
    pub passed: bool,
}

pub const INTEGRAL_TOL: f64 = 1e-6;

/// Residual of the renewal integral equation on `u_grid`:
/// `lambda int V(u+y) dF_B(y) - K V(u) + mu_d int_0^u V(u-y) dF_W(y) + u/t`
/// (value), or the ruin version whose forcing is `mu_d (1 - F_W(u))`.
/// The up-jump integral is truncated at `60 / min beta`.
pub fn verify_integral_equation(
    sol: &StochPoolSolution,
    params: &PoolParams,
    u_grid: &[f64],
) -> IntegralReport {
    let (lambda, mu_d, t) = (params.lambda(), params.mu_d(), params.t());
    let k = params.killing_rate();
    let w_law = &sol.w_law;
    let b_law = &sol.b_law;
    let upper = 60.0 / b_law.rates()[0];
    let mut report = IntegralReport {
        max_relative: 0.0,
        worst_u: 0.0,
        passed: true,
    };
    for &u in u_grid {
        let up = integrate(
            |y| sol.eval(u + y) * b_law.density(y),
            0.0,
            upper,
            1e-300,
            1e-13,
            4000,
        );
        let down = integrate(|y| sol.eval(u - y) * w_law.density(y), 0.0, u, 1e-300, 1e-13, 4000);
        let here = sol.eval(u);
        let forcing = match sol.kind {
            SolutionKind::Value => u / t,
            SolutionKind::RuinProb => mu_d * w_law.survival(u),
        };
        let residual = lambda * up.value - k * here + mu_d * down.value + forcing;
        let scale = lambda * up.abs_integral + k * here.abs() + mu_d * down.abs_integral + forcing.abs();
        let rel = residual.abs() / scale.max(f64::MIN_POSITIVE);
        if rel > report.max_relative || rel.is_nan() {
            report.max_relative = if rel.is_nan() { f64::INFINITY } else { rel };
            report.worst_u = u;
        }
    }
    report.passed = report.max_relative < INTEGRAL_TOL;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> (PoolParams, CombExp, f64) {
        let p = PoolParams::from_rates(0.6, 5.4, 1000.0, 98.0, 0.0, 336.0).unwrap();
        (p, CombExp::exponential(1.0 / 98.0).unwrap(), 1000.0 / 98.0)
    }

    #[test]
    fn single_exponential_matches_closed_forms() {
        let (p, w, a) = reference();
        let v = solve_v_hat_stoch(&p, &w, a).unwrap();
        let psi = solve_psi_hat_stoch(&p, &w, a).unwrap();
        let beta = v.block_law().rates()[0];
        let cf = ExpPoolClosedForm::new(0.6, 5.4, 336.0, 1.0 / 98.0, beta).unwrap();
        for u in [0.0, 1e2, 1e3, 1e4] {
            assert!((v.eval(u) - cf.v_hat(u)).abs() < 1e-10, "V at {u}");
            assert!((psi.eval(u) - cf.psi_hat(u)).abs() < 1e-10, "psi at {u}");
        }
        assert_relative_eq!(v.drift(), 336.0 * (600.0 - 529.2), max_relative = 1e-12);
    }

    #[test]
    fn infinite_horizon_reference_value() {
        let inf = psi_infinite_horizon_exp(0.6, 5.4, 1.0 / 98.0, 1.0 / 1000.0).unwrap();
        assert!((inf.at_zero - 0.98820).abs() < 1e-5);
        assert_relative_eq!(inf.rate, 1.2041e-4, max_relative = 1e-4);
        assert!(inf.eval(1e7) < 1e-300);
        assert!(psi_infinite_horizon_exp(1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn finite_horizon_approaches_infinite_horizon() {
        let inf = psi_infinite_horizon_exp(0.6, 5.4, 1.0 / 98.0, 1.0 / 1000.0).unwrap();
        let (p, w, a) = reference();
        let mut prev = 0.0;
        for t in [1e3, 1e5, 1e7] {
            let p = p.with_horizon(t).unwrap();
            let val = solve_psi_hat_stoch(&p, &w, a).unwrap().eval(5000.0);
            assert!(val > prev && val <= inf.eval(5000.0) + 1e-12);
            prev = val;
        }
        assert!((prev - inf.eval(5000.0)).abs() < 1e-3);
    }

    #[test]
    fn integral_equation_holds_and_detects_perturbation() {
        let p = PoolParams::from_rates(1.0, 2.0, 10.0, 1.0, 0.0, 5.0).unwrap();
        let w = CombExp::new(vec![2.0, -1.0], vec![1.0, 2.0]).unwrap();
        let grid = [0.0, 0.5, 2.0, 7.5];
        for sol in [
            solve_v_hat_stoch(&p, &w, 6.0).unwrap(),
            solve_psi_hat_stoch(&p, &w, 6.0).unwrap(),
        ] {
            let rep = verify_integral_equation(&sol, &p, &grid);
            assert!(rep.passed, "{rep:?}");
            let bad = verify_integral_equation(&sol.perturbed(1e-3), &p, &grid);
            assert!(!bad.passed, "{bad:?}");
        }
    }

    #[test]
    fn ruin_probability_in_unit_interval_and_decreasing() {
        let p = PoolParams::from_rates(1.0, 2.0, 10.0, 1.0, 0.0, 5.0).unwrap();
        let w = CombExp::new(vec![0.3, 0.7], vec![0.5, 3.0]).unwrap();
        let psi = solve_psi_hat_stoch(&p, &w, 4.0).unwrap();
        let mut prev = 1.0;
        for i in 0..200 {
            let u = i as f64 * 0.25;
            let v = psi.eval(u);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert_eq!(psi.eval(-0.1), 1.0);
    }
}

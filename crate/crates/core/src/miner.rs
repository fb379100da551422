//! Individual miner: constant cost outflow `c` and reward arrivals, either a
//! share reward at rate `p mu` inside a pool or a block reward at rate
//! `p lambda` when mining alone.
//!
//! Ruin can happen only through the cost drift, so both quantities are single
//! exponentials in the capital: `psi(u,t) = exp(-kappa u)` and
//! `V(u,t) = u + (rate E[J] - c) t (1 - exp(-kappa u))`.

use crate::error::{invalid, Error, Result};
use crate::model::{CombExp, MinerParams, RewardLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MinerMode {
    Solo,
    Pooled,
}

/// How the decay exponent was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    /// Negative solution of `-c rho + rate (exp(J rho) - 1) = 1/t`.
    RhoStar(f64),
    /// Positive solution of `c R + rate E[exp(-R J)] - (1/t + rate) = 0`.
    Adjustment(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinerSolution {
    pub mode: MinerMode,
    pub exponent: Exponent,
    /// Reward arrival rate in events per hour.
    pub rate: f64,
    /// Mean reward per arrival.
    pub jump_mean: f64,
    pub cost: f64,
    pub t: f64,
    /// `|equation(exponent)|` at the returned root.
    pub residual: f64,
}

impl MinerSolution {
    /// `kappa > 0` with `psi(u,t) = exp(-kappa u)`.
    pub fn decay(&self) -> f64 {
        match self.exponent {
            Exponent::RhoStar(r) => -r,
            Exponent::Adjustment(r) => r,
        }
    }

    /// Expected income per hour net of cost.
    pub fn net_rate(&self) -> f64 {
        self.rate * self.jump_mean - self.cost
    }

    pub fn net_profit_holds(&self) -> bool {
        self.net_rate() > 0.0
    }

    pub fn psi_hat(&self, u: f64) -> f64 {
        if u < 0.0 {
            1.0
        } else {
            (-self.decay() * u).exp()
        }
    }

    pub fn v_hat(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        u - self.net_rate() * self.t * (-self.decay() * u).exp_m1()
    }
}

fn rate_for(params: &MinerParams, mode: MinerMode) -> f64 {
    match mode {
        MinerMode::Solo => params.solo_rate(),
        MinerMode::Pooled => params.pooled_rate(),
    }
}

/// Safeguarded Newton on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of
/// opposite signs.
fn bracketed_newton(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Option<f64> {
    let (flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let lo_negative = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= tol * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= tol * hi.abs().max(lo.abs()) {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// Deterministic reward `jump` per arrival; the rate is `p mu` (pooled) or
/// `p lambda` (solo). Pass `w` for the pooled and `b` for the solo miner.
pub fn miner_det_solution(params: &MinerParams, mode: MinerMode, jump: f64) -> Result<MinerSolution> {
    if !(jump.is_finite() && jump > 0.0) {
        return Err(invalid("jump", format!("must be > 0, got {jump}")));
    }
    let rate = rate_for(params, mode);
    let c = params.cost_rate();
    let t = params.t();
    let g = |rho: f64| {
        let e = (jump * rho).exp();
        (-c * rho + rate * (e - 1.0) - 1.0 / t, -c + rate * jump * e)
    };
    // start from (-50/jump, 0) and widen until g changes sign
    let mut lo = -50.0 / jump;
    let mut widen = 0;
    while g(lo).0 <= 0.0 {
        lo *= 2.0;
        widen += 1;
        if widen > 200 || !lo.is_finite() {
            return Err(Error::NoNegativeRoot(format!(
                "no sign change below zero (rate {rate}, jump {jump}, cost {c})"
            )));
        }
    }
    let rho = bracketed_newton(g, lo, 0.0, 1e-15)
        .ok_or_else(|| Error::NoNegativeRoot("bracket lost".into()))?;
    if !(rho < 0.0) {
        return Err(Error::NoNegativeRoot(format!("root {rho} is not negative")));
    }
    Ok(MinerSolution {
        mode,
        exponent: Exponent::RhoStar(rho),
        rate,
        jump_mean: jump,
        cost: c,
        t,
        residual: g(rho).0.abs(),
    })
}

/// Pooled miner with the deterministic share reward held in `params`.
pub fn miner_pooled_det(params: &MinerParams) -> Result<MinerSolution> {
    match params.reward() {
        RewardLaw::Deterministic { amount } => miner_det_solution(params, MinerMode::Pooled, *amount),
        RewardLaw::CombExp(_) => Err(invalid("reward", "expected a deterministic share reward")),
    }
}

/// Combination-of-exponentials reward per arrival.
pub fn miner_stoch_solution(
    params: &MinerParams,
    mode: MinerMode,
    law: &CombExp,
) -> Result<MinerSolution> {
    let rate = rate_for(params, mode);
    let c = params.cost_rate();
    let t = params.t();
    let h = |r: f64| {
        let mut lt = 0.0;
        let mut dlt = 0.0;
        for (a, alpha) in law.weights().iter().zip(law.rates()) {
            lt += a * alpha / (r + alpha);
            dlt -= a * alpha / ((r + alpha) * (r + alpha));
        }
        (c * r + rate * lt - (1.0 / t + rate), c + rate * dlt)
    };
    // rate * E[exp(-R J)] >= 0, so h >= 0 once c R >= 1/t + rate
    let hi = (1.0 / t + rate) / c;
    let r = bracketed_newton(h, 0.0, hi, 1e-15)
        .ok_or_else(|| Error::NoPositiveRoot(format!("no sign change on (0, {hi}]")))?;
    if !(r > 0.0) {
        return Err(Error::NoPositiveRoot(format!("root {r} is not positive")));
    }
    Ok(MinerSolution {
        mode,
        exponent: Exponent::Adjustment(r),
        rate,
        jump_mean: law.mean(),
        cost: c,
        t,
        residual: h(r).0.abs(),
    })
}

/// Ruin probability `psi(u,t) = exp(-R u)` for the pooled miner with random
/// share rewards.
pub fn miner_psi_stoch(params: &MinerParams, law: &CombExp) -> Result<impl Fn(f64) -> f64> {
    let sol = miner_stoch_solution(params, MinerMode::Pooled, law)?;
    Ok(move |u: f64| sol.psi_hat(u))
}

/// Positive root for an exponential reward:
/// `c R^2 + (alpha c - 1/t - rate) R - alpha/t = 0`.
pub fn miner_exp_adjustment_root(rate: f64, cost: f64, t: f64, alpha: f64) -> f64 {
    let b = alpha * cost - 1.0 / t - rate;
    let disc = b * b + 4.0 * cost * alpha / t;
    if b < 0.0 {
        (-b + disc.sqrt()) / (2.0 * cost)
    } else {
        2.0 * alpha / t / (b + disc.sqrt())
    }
}

/// Operating cost in money units per hour: the miner's share of the network
/// power draw times the electricity price, converted at `currency_per_mu`.
pub fn miner_electricity_cost(
    p_i: f64,
    network_kwh_per_hour: f64,
    price_per_kwh: f64,
    currency_per_mu: f64,
) -> f64 {
    p_i * network_kwh_per_hour * price_per_kwh / currency_per_mu
}

/// First capital in `(0, u_max]` where `V_pooled - V_solo` changes sign,
/// located on a grid of `steps` cells and refined by bisection.
pub fn break_even_capital(
    pooled: &MinerSolution,
    solo: &MinerSolution,
    u_max: f64,
    steps: usize,
) -> Option<f64> {
    let diff = |u: f64| pooled.v_hat(u) - solo.v_hat(u);
    let h = u_max / steps as f64;
    let mut prev_u = h;
    let mut prev = diff(prev_u);
    for i in 2..=steps {
        let u = h * i as f64;
        let d = diff(u);
        if d == 0.0 {
            return Some(u);
        }
        if d.signum() != prev.signum() {
            let (mut lo, mut hi) = (prev_u, u);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if diff(mid).signum() == prev.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-12 * hi {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev_u = u;
        prev = d;
    }
    None
}

/// Number of sign changes of `V_pooled - V_solo` on the grid `h, 2h, ..., u_max`.
pub fn break_even_sign_changes(pooled: &MinerSolution, solo: &MinerSolution, u_max: f64, steps: usize) -> usize {
    let h = u_max / steps as f64;
    let signs: Vec<f64> = (1..=steps)
        .map(|i| {
            let u = h * i as f64;
            (pooled.v_hat(u) - solo.v_hat(u)).signum()
        })
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkParams;
    use approx::assert_relative_eq;

    fn params(cost: f64, w: f64) -> MinerParams {
        let net = NetworkParams::with_share_rate(6.0, 60.0, 0.1).unwrap();
        MinerParams::new(0.001, cost, &net, RewardLaw::deterministic(w).unwrap(), 0.0, 336.0).unwrap()
    }

    #[test]
    fn capital_zero_boundary() {
        let sol = miner_pooled_det(&params(3.4, 98.0)).unwrap();
        assert_eq!(sol.v_hat(0.0), 0.0);
        assert_eq!(sol.psi_hat(0.0), 1.0);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn large_capital_limit() {
        let sol = miner_pooled_det(&params(3.4, 98.0)).unwrap();
        let u = 1e6;
        assert_relative_eq!(sol.v_hat(u) - u, (0.06 * 98.0 - 3.4) * 336.0, max_relative = 1e-10);
    }

    #[test]
    fn log_linear_ruin_probability() {
        let sol = miner_pooled_det(&params(3.4, 98.0)).unwrap();
        let Exponent::RhoStar(rho) = sol.exponent else { panic!() };
        let slope = (sol.psi_hat(600.0).ln() - sol.psi_hat(500.0).ln()) / 100.0;
        assert!((slope - rho).abs() < 1e-9);
    }

    #[test]
    fn exponential_reward_matches_quadratic() {
        let p = params(3.4, 98.0);
        let law = CombExp::exponential(1.0 / 98.0).unwrap();
        let sol = miner_stoch_solution(&p, MinerMode::Pooled, &law).unwrap();
        let r = miner_exp_adjustment_root(p.pooled_rate(), 3.4, 336.0, 1.0 / 98.0);
        assert!((sol.decay() - r).abs() <= 1e-10 * r);
        assert!(sol.residual < 1e-12);
        let psi = miner_psi_stoch(&p, &law).unwrap();
        assert_eq!(psi(0.0), 1.0);
        assert_relative_eq!(psi(100.0), (-r * 100.0).exp(), max_relative = 1e-9);
    }

    #[test]
    fn stochastic_value_vanishes_at_zero() {
        let p = params(3.4, 98.0);
        let law = CombExp::new(vec![2.0, -1.0], vec![1.0 / 98.0, 2.0 / 98.0]).unwrap();
        let sol = miner_stoch_solution(&p, MinerMode::Pooled, &law).unwrap();
        assert!(sol.v_hat(0.0).abs() < 1e-9);
        assert_relative_eq!(sol.jump_mean, 1.5 * 98.0, max_relative = 1e-12);
    }

    #[test]
    fn electricity_cost_is_linear() {
        let kwh = 115.541e9 / (365.25 * 24.0);
        let c = miner_electricity_cost(0.001, kwh, 0.06, 231.85);
        assert!((c - 3.41098).abs() < 1e-4, "{c}");
        assert_eq!(miner_electricity_cost(0.0, kwh, 0.06, 231.85), 0.0);
        assert_relative_eq!(miner_electricity_cost(0.001, kwh, 0.12, 231.85), 2.0 * c);
    }

    #[test]
    fn pooled_and_solo_cross_once() {
        let kwh = 115.541e9 / (365.25 * 24.0);
        let c = miner_electricity_cost(0.001, kwh, 0.06, 231.85);
        let p = params(c, 98.0);
        let pooled = miner_det_solution(&p, MinerMode::Pooled, 98.0).unwrap();
        let solo = miner_det_solution(&p, MinerMode::Solo, 1000.0).unwrap();
        let u = break_even_capital(&pooled, &solo, 1e4, 10_000).unwrap();
        assert!((u - 1255.0).abs() <= 0.05 * 1255.0, "{u}");
        assert_eq!(break_even_sign_changes(&pooled, &solo, 1e4, 10_000), 1);
        for i in 0..=100 {
            let u = i as f64 * 100.0;
            assert!(pooled.psi_hat(u) <= solo.psi_hat(u));
        }
    }
}

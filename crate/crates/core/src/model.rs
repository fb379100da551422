//! Parameters of the pool manager and miner surplus processes.
//!
//! The pool manager receives block rewards at rate `lambda` and pays share
//! rewards at rate `mu = lambda + mu_d`. Because every block is also a share,
//! the down-jump process without simultaneous up-jump runs at `mu_d = mu - lambda`
//! and each block contributes a net `b - w`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Points of the log-spaced grid used to check that a combination of
/// exponentials is a proper density.
pub const DENSITY_GRID_POINTS: usize = 10_000;
/// Densities below this value on the grid are rejected.
pub const DENSITY_NEGATIVE_TOL: f64 = -1e-12;

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(name, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

/// Which functional an analytic solution represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    /// Expected surplus at the horizon on the event of no ruin, `V(u, t)`.
    Value,
    /// Ruin probability before the horizon, `psi(u, t)`.
    RuinProb,
}

/// Network-wide Poisson intensities for blocks and shares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    lambda_network: f64,
    mu_network: f64,
    q: f64,
}

impl NetworkParams {
    /// Builds the network from the block rate and the relative difficulty `q`;
    /// the share rate is `lambda / q`.
    pub fn new(lambda_network: f64, q: f64) -> Result<Self> {
        check_positive("lambda_network", lambda_network)?;
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("q", format!("must lie in (0,1), got {q}")));
        }
        Ok(Self {
            lambda_network,
            mu_network: lambda_network / q,
            q,
        })
    }

    /// Builds the network from all three quantities, checking `lambda = q * mu`.
    pub fn with_share_rate(lambda_network: f64, mu_network: f64, q: f64) -> Result<Self> {
        let net = Self::new(lambda_network, q)?;
        check_positive("mu_network", mu_network)?;
        let implied = q * mu_network;
        if (implied - lambda_network).abs() > 1e-9 * lambda_network.max(1.0) {
            return Err(invalid(
                "mu_network",
                format!("lambda = q * mu violated: {lambda_network} != {q} * {mu_network}"),
            ));
        }
        Ok(Self { mu_network, ..net })
    }

    pub fn lambda_network(&self) -> f64 {
        self.lambda_network
    }

    pub fn mu_network(&self) -> f64 {
        self.mu_network
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// How a [`PoolParams`] value was obtained from network quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolOrigin {
    pub share: f64,
    pub fee: f64,
    pub q: f64,
}

/// Parameterization of the pool manager's double-sided jump surplus process.
///
/// `b` and `w` are the up- and down-jump sizes for deterministic rewards, and
/// serve as the means of the reward laws in the stochastic case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolParams {
    origin: Option<PoolOrigin>,
    b: f64,
    w: f64,
    lambda: f64,
    mu_d: f64,
    u: f64,
    t: f64,
}

impl PoolParams {
    /// Builds pool parameters directly from the intensities.
    pub fn from_rates(lambda: f64, mu_d: f64, b: f64, w: f64, u: f64, t: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("mu_d", mu_d)?;
        check_positive("t", t)?;
        check_positive("w", w)?;
        if !(b.is_finite() && b > w) {
            return Err(invalid("b", format!("must satisfy b > w = {w}, got {b}")));
        }
        if !u.is_finite() {
            return Err(invalid("u", "must be finite"));
        }
        Ok(Self {
            origin: None,
            b,
            w,
            lambda,
            mu_d,
            u,
            t,
        })
    }

    pub fn origin(&self) -> Option<PoolOrigin> {
        self.origin
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mu_d(&self) -> f64 {
        self.mu_d
    }
    /// Total share rate of the pool, `lambda + mu_d`.
    pub fn mu(&self) -> f64 {
        self.lambda + self.mu_d
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Total event intensity including the exponential horizon, `lambda + mu_d + 1/t`.
    pub fn killing_rate(&self) -> f64 {
        self.lambda + self.mu_d + 1.0 / self.t
    }

    /// Expected net income per hour, `lambda b - mu w`.
    pub fn drift(&self) -> f64 {
        self.lambda * self.b - self.mu() * self.w
    }

    /// Net profit condition `lambda b > mu w`. Reported, never enforced.
    pub fn net_profit_holds(&self) -> bool {
        self.drift() > 0.0
    }

    pub fn with_capital(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    pub fn with_horizon(mut self, t: f64) -> Result<Self> {
        check_positive("t", t)?;
        self.t = t;
        Ok(self)
    }

    /// Jump sizes as lattice integers, required by the deterministic solvers.
    pub fn lattice_jumps(&self) -> Result<(u64, u64)> {
        let as_int = |name: &'static str, v: f64| {
            if v.fract() != 0.0 || !(1.0..=1e9).contains(&v) {
                Err(invalid(name, format!("must be a positive integer on the lattice, got {v}")))
            } else {
                Ok(v as u64)
            }
        };
        Ok((as_int("b", self.b)?, as_int("w", self.w)?))
    }

    /// Returns a copy with `w` rounded to the nearest integer and the applied shift.
    pub fn with_rounded_share_reward(mut self) -> Result<(Self, f64)> {
        let rounded = self.w.round();
        let shift = rounded - self.w;
        if rounded < 1.0 || rounded >= self.b {
            return Err(invalid("w", format!("rounds to {rounded}, outside [1, b)")));
        }
        self.w = rounded;
        Ok((self, shift))
    }
}

/// Derives the pool parameters from network quantities: `w = (1-f) b q`,
/// `lambda = p_I lambda_network`, `mu_d = p_I mu_network - lambda`.
pub fn derive_pool_params(
    network: &NetworkParams,
    share: f64,
    fee: f64,
    b: f64,
    u: f64,
    t: f64,
) -> Result<PoolParams> {
    if !(share > 0.0 && share <= 1.0) {
        return Err(invalid("p_I", format!("must lie in (0,1], got {share}")));
    }
    if !(0.0..1.0).contains(&fee) {
        return Err(invalid("f", format!("must lie in [0,1), got {fee}")));
    }
    check_positive("b", b)?;
    let q = network.q();
    let w = (1.0 - fee) * b * q;
    let lambda = share * network.lambda_network();
    let mu_d = share * network.mu_network() - lambda;
    let mut params = PoolParams::from_rates(lambda, mu_d, b, w, u, t)?;
    params.origin = Some(PoolOrigin { share, fee, q });
    Ok(params)
}

/// Density `sum_i A_i alpha_i exp(-alpha_i x)` with `sum_i A_i = 1` and
/// strictly increasing rates. Weights may be negative as long as the density
/// stays nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CombExpRaw", into = "CombExpRaw")]
pub struct CombExp {
    weights: Vec<f64>,
    rates: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CombExpRaw {
    weights: Vec<f64>,
    rates: Vec<f64>,
}

impl TryFrom<CombExpRaw> for CombExp {
    type Error = Error;
    fn try_from(raw: CombExpRaw) -> Result<Self> {
        CombExp::new(raw.weights, raw.rates)
    }
}

impl From<CombExp> for CombExpRaw {
    fn from(c: CombExp) -> Self {
        CombExpRaw {
            weights: c.weights,
            rates: c.rates,
        }
    }
}

impl CombExp {
    pub fn new(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return Err(invalid(
                "weights",
                format!("need equal, nonzero lengths (got {} and {})", weights.len(), rates.len()),
            ));
        }
        if weights.iter().chain(&rates).any(|v| !v.is_finite()) {
            return Err(invalid("weights", "all weights and rates must be finite"));
        }
        if weights.contains(&0.0) {
            return Err(invalid("weights", "a zero weight leaves a redundant component; drop it"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("weights", format!("must sum to 1, got {total}")));
        }
        if rates[0] <= 0.0 {
            return Err(invalid("rates", "must be positive"));
        }
        if rates.windows(2).any(|p| p[1] <= p[0]) {
            return Err(invalid("rates", "must be strictly increasing"));
        }
        let law = Self { weights, rates };
        let mean = law.mean();
        if !(mean.is_finite() && mean > 0.0) {
            return Err(invalid("weights", format!("mean must be positive, got {mean}")));
        }
        let (x, min_density) = law.min_density_on_grid();
        if min_density < DENSITY_NEGATIVE_TOL {
            return Err(invalid(
                "weights",
                format!("density is negative ({min_density:e}) at x = {x:e}"),
            ));
        }
        Ok(law)
    }

    /// Exponential law with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![rate])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.rates).map(|(a, r)| a / r).sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(a, r)| a * r * (-r * x).exp())
            .sum()
    }

    /// Density value clamped at zero for reporting; tiny negative rounding is
    /// tolerated by construction.
    pub fn reported_density(&self, x: f64) -> f64 {
        self.density(x).max(0.0)
    }

    /// Survival function `1 - F(x) = sum_i A_i exp(-alpha_i x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(a, r)| a * (-r * x).exp())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Laplace transform `E[exp(-s W)]`.
    pub fn laplace(&self, s: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(a, r)| a * r / (r + s))
            .sum()
    }

    /// Smallest density value on the log-spaced validation grid and its location.
    pub fn min_density_on_grid(&self) -> (f64, f64) {
        let lo = (1e-6 / self.rates[self.rates.len() - 1]).ln();
        let hi = (50.0 / self.rates[0]).ln();
        let mut worst = (0.0, self.density(0.0));
        for k in 0..DENSITY_GRID_POINTS {
            let x = (lo + (hi - lo) * k as f64 / (DENSITY_GRID_POINTS - 1) as f64).exp();
            let d = self.density(x);
            if d < worst.1 {
                worst = (x, d);
            }
        }
        worst
    }

    /// Law of `a W`: same weights, rates divided by `a`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        check_positive("a", a)?;
        Ok(Self {
            weights: self.weights.clone(),
            rates: self.rates.iter().map(|r| r / a).collect(),
        })
    }

    /// Draws one variate. Negative weights are handled by rejection from the
    /// mixture of the positive components, which dominates the density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let positive: f64 = self.weights.iter().filter(|a| **a > 0.0).sum();
        loop {
            let mut pick = rng.random::<f64>() * positive;
            let mut idx = 0;
            for (i, a) in self.weights.iter().enumerate() {
                if *a <= 0.0 {
                    continue;
                }
                idx = i;
                if pick < *a {
                    break;
                }
                pick -= a;
            }
            let x = Exp::new(self.rates[idx]).expect("rates are positive").sample(rng);
            if positive == 1.0 {
                return x;
            }
            let envelope: f64 = self
                .weights
                .iter()
                .zip(&self.rates)
                .filter(|(a, _)| **a > 0.0)
                .map(|(a, r)| a * r * (-r * x).exp())
                .sum();
            if rng.random::<f64>() * envelope <= self.density(x) {
                return x;
            }
        }
    }
}

/// Law of a reward size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardLaw {
    Deterministic { amount: f64 },
    CombExp(CombExp),
}

impl RewardLaw {
    pub fn deterministic(amount: f64) -> Result<Self> {
        check_positive("amount", amount)?;
        Ok(Self::Deterministic { amount })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Deterministic { amount } => *amount,
            Self::CombExp(c) => c.mean(),
        }
    }
}

/// Rescales a combination of exponentials by `a > 1` (block reward `B_r = a W`).
pub fn scale_comb_exp(law: &CombExp, a: f64) -> Result<CombExp> {
    if !(a.is_finite() && a > 1.0) {
        return Err(invalid("a", format!("scale must exceed 1, got {a}")));
    }
    law.scaled(a)
}

/// Individual miner parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerParams {
    p_miner: f64,
    cost_rate: f64,
    mu_network: f64,
    lambda_network: f64,
    reward: RewardLaw,
    u: f64,
    t: f64,
}

impl MinerParams {
    pub fn new(
        p_miner: f64,
        cost_rate: f64,
        network: &NetworkParams,
        reward: RewardLaw,
        u: f64,
        t: f64,
    ) -> Result<Self> {
        if !(p_miner > 0.0 && p_miner <= 1.0) {
            return Err(invalid("p_i", format!("must lie in (0,1], got {p_miner}")));
        }
        check_positive("c_i", cost_rate)?;
        check_positive("t", t)?;
        if !u.is_finite() {
            return Err(invalid("u", "must be finite"));
        }
        Ok(Self {
            p_miner,
            cost_rate,
            mu_network: network.mu_network(),
            lambda_network: network.lambda_network(),
            reward,
            u,
            t,
        })
    }

    pub fn p_miner(&self) -> f64 {
        self.p_miner
    }
    pub fn cost_rate(&self) -> f64 {
        self.cost_rate
    }
    pub fn mu_network(&self) -> f64 {
        self.mu_network
    }
    pub fn lambda_network(&self) -> f64 {
        self.lambda_network
    }
    pub fn reward(&self) -> &RewardLaw {
        &self.reward
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Share rate of the miner inside a pay-per-share pool, `p_i mu`.
    pub fn pooled_rate(&self) -> f64 {
        self.p_miner * self.mu_network
    }

    /// Block rate of the miner mining alone, `p_i lambda`.
    pub fn solo_rate(&self) -> f64 {
        self.p_miner * self.lambda_network
    }

    /// Net profit condition `p_i mu E[W] > c_i` for the pooled miner.
    pub fn net_profit_holds(&self) -> bool {
        self.pooled_rate() * self.reward.mean() > self.cost_rate
    }

    pub fn with_capital(mut self, u: f64) -> Self {
        self.u = u;
        self
    }

    pub fn with_reward(mut self, reward: RewardLaw) -> Self {
        self.reward = reward;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_network() -> NetworkParams {
        NetworkParams::with_share_rate(6.0, 60.0, 0.1).unwrap()
    }

    #[test]
    fn reference_pool_parameters() {
        let p = derive_pool_params(&reference_network(), 0.1, 0.02, 1000.0, 0.0, 336.0).unwrap();
        assert_relative_eq!(p.lambda(), 0.6, max_relative = 1e-14);
        assert_relative_eq!(p.mu_d(), 5.4, max_relative = 1e-14);
        assert_relative_eq!(p.w(), 98.0, max_relative = 1e-14);
        assert!(p.net_profit_holds());
    }

    #[test]
    fn zero_fee_share_reward_is_bq() {
        let net = reference_network();
        let p = derive_pool_params(&net, 0.1, 0.0, 1000.0, 0.0, 336.0).unwrap();
        assert_eq!(p.w(), 1000.0 * net.q());
    }

    #[test]
    fn whole_network_pool() {
        let net = NetworkParams::new(1.0, 0.5).unwrap();
        let p = derive_pool_params(&net, 1.0, 0.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!((p.lambda(), p.mu_d(), p.w()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        assert!(NetworkParams::new(6.0, 1.0).is_err());
        assert!(NetworkParams::new(6.0, 0.0).is_err());
        assert!(NetworkParams::with_share_rate(6.0, 50.0, 0.1).is_err());
        let net = reference_network();
        assert!(derive_pool_params(&net, 0.0, 0.02, 1000.0, 0.0, 336.0).is_err());
        assert!(derive_pool_params(&net, 1.5, 0.02, 1000.0, 0.0, 336.0).is_err());
        assert!(derive_pool_params(&net, 0.1, 1.0, 1000.0, 0.0, 336.0).is_err());
        assert!(derive_pool_params(&net, 0.1, -0.1, 1000.0, 0.0, 336.0).is_err());
    }

    #[test]
    fn scaling_reference_exponential() {
        let w = CombExp::exponential(1.0 / 98.0).unwrap();
        let b = scale_comb_exp(&w, 1000.0 / 98.0).unwrap();
        assert_relative_eq!(b.rates()[0], 1.0 / 1000.0, max_relative = 1e-14);
        assert_eq!(b.weights(), w.weights());
    }

    #[test]
    fn scaling_near_identity() {
        let w = CombExp::new(vec![0.3, 0.7], vec![1.0, 4.0]).unwrap();
        let b = scale_comb_exp(&w, 1.0 + 1e-12).unwrap();
        for (x, y) in w.rates().iter().zip(b.rates()) {
            assert_relative_eq!(*x, *y, max_relative = 1e-11);
        }
        assert!(scale_comb_exp(&w, 1.0).is_err());
        assert!(scale_comb_exp(&w, 0.5).is_err());
    }

    #[test]
    fn scaling_negative_weight_mix() {
        let w = CombExp::new(vec![2.0, -1.0], vec![1.0, 2.0]).unwrap();
        assert_relative_eq!(w.mean(), 1.5, max_relative = 1e-15);
        let b = scale_comb_exp(&w, 2.0).unwrap();
        assert_eq!(b.rates(), &[0.5, 1.0]);
        assert_relative_eq!(b.mean(), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn rejects_negative_density() {
        // slowest component carries a negative weight: negative tail
        assert!(CombExp::new(vec![-1.0, 2.0], vec![1.0, 2.0]).is_err());
        assert!(CombExp::new(vec![0.5, 0.4], vec![1.0, 2.0]).is_err());
        assert!(CombExp::new(vec![0.5, 0.5], vec![2.0, 1.0]).is_err());
        assert!(CombExp::new(vec![1.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn pooled_and_solo_income_match_without_fee() {
        let net = reference_network();
        let b = 1000.0;
        let w = b * net.q();
        let m = MinerParams::new(0.001, 3.4, &net, RewardLaw::deterministic(w).unwrap(), 0.0, 336.0)
            .unwrap();
        assert_relative_eq!(m.pooled_rate() * w, m.solo_rate() * b, max_relative = 1e-14);
    }

    #[test]
    fn serde_rejects_invalid_comb_exp() {
        let bad: std::result::Result<CombExp, _> =
            serde_json::from_str(r#"{"weights":[0.5],"rates":[1.0]}"#);
        assert!(bad.is_err());
        let good: CombExp = serde_json::from_str(r#"{"weights":[1.0],"rates":[0.5]}"#).unwrap();
        assert_eq!(good.mean(), 2.0);
    }
}

//! Monte Carlo simulation of the pool and miner surplus processes.
//!
//! A path is simulated once as the increment process `X(s) = R(s) - u`; it
//! ruins capital `u` exactly when `u + min X < 0`, where the minimum runs over
//! the instants at which ruin is checked (payouts for the pool, the whole
//! time axis for the miner). One batch of paths therefore serves a whole grid
//! of capitals.
//!
//! Paths are grouped in chunks of [`CHUNK`]. Chunk `k` draws from a ChaCha8
//! generator seeded with `seed` on stream `k`, so estimates depend only on
//! `(config, seed)` and not on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::model::{scale_comb_exp, CombExp, MinerParams, PoolParams};

pub const CHUNK: usize = 4096;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub enum Process {
    /// Blocks at rate `lambda` add `b - w`; payouts at rate `mu_d` remove `w`.
    PoolDet { lambda: f64, mu_d: f64, b: f64, w: f64 },
    /// Blocks add `B_r`, payouts remove `W`.
    PoolStoch {
        lambda: f64,
        mu_d: f64,
        w_law: CombExp,
        b_law: CombExp,
    },
    /// Pooled miner: deterministic share reward at rate `p mu`, cost drift `c`.
    MinerDet { rate: f64, jump: f64, cost: f64 },
    /// Solo miner: block reward at rate `p lambda`, cost drift `c`.
    MinerSolo { rate: f64, jump: f64, cost: f64 },
    /// Miner with random rewards.
    MinerStoch { rate: f64, law: CombExp, cost: f64 },
}

impl Process {
    pub fn pool_det(params: &PoolParams) -> Self {
        Self::PoolDet {
            lambda: params.lambda(),
            mu_d: params.mu_d(),
            b: params.b(),
            w: params.w(),
        }
    }

    pub fn pool_stoch(params: &PoolParams, w_law: &CombExp, a: f64) -> Result<Self> {
        Ok(Self::PoolStoch {
            lambda: params.lambda(),
            mu_d: params.mu_d(),
            w_law: w_law.clone(),
            b_law: scale_comb_exp(w_law, a)?,
        })
    }

    pub fn miner_pooled(params: &MinerParams, w: f64) -> Self {
        Self::MinerDet {
            rate: params.pooled_rate(),
            jump: w,
            cost: params.cost_rate(),
        }
    }

    pub fn miner_solo(params: &MinerParams, b: f64) -> Self {
        Self::MinerSolo {
            rate: params.solo_rate(),
            jump: b,
            cost: params.cost_rate(),
        }
    }

    pub fn miner_stoch(params: &MinerParams, law: &CombExp) -> Self {
        Self::MinerStoch {
            rate: params.pooled_rate(),
            law: law.clone(),
            cost: params.cost_rate(),
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        match self {
            Self::PoolDet { lambda, mu_d, b, w } => {
                positive("lambda", *lambda)?;
                positive("mu_d", *mu_d)?;
                positive("w", *w)?;
                positive("b", *b - *w)
            }
            Self::PoolStoch { lambda, mu_d, .. } => {
                positive("lambda", *lambda)?;
                positive("mu_d", *mu_d)
            }
            Self::MinerDet { rate, jump, cost } | Self::MinerSolo { rate, jump, cost } => {
                positive("rate", *rate)?;
                positive("jump", *jump)?;
                positive("cost", *cost)
            }
            Self::MinerStoch { rate, cost, .. } => {
                positive("rate", *rate)?;
                positive("cost", *cost)
            }
        }
    }

    /// Mean increment per unit time, `E[X(s)]/s`.
    pub fn drift(&self) -> f64 {
        match self {
            Self::PoolDet { lambda, mu_d, b, w } => lambda * (b - w) - mu_d * w,
            Self::PoolStoch {
                lambda,
                mu_d,
                w_law,
                b_law,
            } => lambda * b_law.mean() - mu_d * w_law.mean(),
            Self::MinerDet { rate, jump, cost } | Self::MinerSolo { rate, jump, cost } => {
                rate * jump - cost
            }
            Self::MinerStoch { rate, law, cost } => rate * law.mean() - cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(f64),
    /// Exponential with the given mean.
    Exponential(f64),
}

impl Horizon {
    pub fn mean(&self) -> f64 {
        match self {
            Self::Fixed(t) | Self::Exponential(t) => *t,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Fixed(t) => *t,
            Self::Exponential(t) => Exp::new(1.0 / t).expect("positive mean").sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub process: Process,
    pub capitals: Vec<f64>,
    pub horizon: Horizon,
    pub n_paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimand {
    /// `P(tau <= T)`.
    RuinProb,
    /// `E[R_T 1{tau > T}]`.
    ExpectedSurplusNoRuin,
    /// `E[R_T]` ignoring ruin.
    UnconditionalSurplus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub estimand: Estimand,
    pub capital: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub half_width: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimEstimate {
    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.n_paths as f64).sqrt()
    }
}

/// Estimates for one capital.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub capital: f64,
    pub ruin: SimEstimate,
    pub value: SimEstimate,
    pub unconditional: SimEstimate,
}

/// Summary of one simulated increment path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    /// Minimum of `X` over the ruin-checking instants, starting from `X(0) = 0`.
    pub min_level: f64,
    /// `X(T)`.
    pub terminal: f64,
}

/// Result of a single path for a single capital.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    pub ruined: bool,
    pub terminal_surplus: f64,
}

fn exp_sample<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let e: f64 = rand_distr::Exp1.sample(rng);
    e / rate
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Sum of `k` exponentials with the given rate.
fn gamma_sum<R: Rng + ?Sized>(k: u64, rate: f64, rng: &mut R) -> f64 {
    if k == 0 {
        return 0.0;
    }
    Gamma::new(k as f64, 1.0 / rate).expect("valid gamma").sample(rng)
}

/// Simulates `X` on `[0, horizon]`.
///
/// For pools the time between blocks carries only payouts, so `X` decreases
/// there and its minimum sits just before the next block. The deterministic
/// pool therefore draws the block gap and a Poisson number of payouts in it;
/// with exponential share rewards the total payout of a gap is a Gamma sum.
/// Other reward laws fall back to one event at a time.
pub fn sample_path<R: Rng + ?Sized>(process: &Process, horizon: f64, rng: &mut R) -> PathSummary {
    let mut x = 0.0f64;
    let mut min = 0.0f64;
    let mut time = 0.0f64;
    match process {
        Process::PoolDet { lambda, mu_d, b, w } => loop {
            let gap = exp_sample(*lambda, rng);
            let span = gap.min(horizon - time);
            let k = poisson_count(mu_d * span, rng);
            x -= k as f64 * w;
            min = min.min(x);
            if time + gap >= horizon {
                break;
            }
            time += gap;
            x += b - w;
        },
        Process::PoolStoch {
            lambda,
            mu_d,
            w_law,
            b_law,
        } if w_law.order() == 1 => {
            let alpha = w_law.rates()[0];
            loop {
                let gap = exp_sample(*lambda, rng);
                let span = gap.min(horizon - time);
                let k = poisson_count(mu_d * span, rng);
                x -= gamma_sum(k, alpha, rng);
                min = min.min(x);
                if time + gap >= horizon {
                    break;
                }
                time += gap;
                x += b_law.sample(rng);
            }
        }
        Process::PoolStoch {
            lambda,
            mu_d,
            w_law,
            b_law,
        } => {
            let total = lambda + mu_d;
            loop {
                time += exp_sample(total, rng);
                if time >= horizon {
                    break;
                }
                if rng.random::<f64>() * total < *lambda {
                    x += b_law.sample(rng);
                } else {
                    x -= w_law.sample(rng);
                    min = min.min(x);
                }
            }
        }
        Process::MinerDet { rate, jump, cost } | Process::MinerSolo { rate, jump, cost } => loop {
            let gap = exp_sample(*rate, rng);
            let span = gap.min(horizon - time);
            x -= cost * span;
            min = min.min(x);
            if time + gap >= horizon {
                break;
            }
            time += gap;
            x += jump;
        },
        Process::MinerStoch { rate, law, cost } => loop {
            let gap = exp_sample(*rate, rng);
            let span = gap.min(horizon - time);
            x -= cost * span;
            min = min.min(x);
            if time + gap >= horizon {
                break;
            }
            time += gap;
            x += law.sample(rng);
        },
    }
    PathSummary {
        min_level: min,
        terminal: x,
    }
}

/// Draws a horizon and one path, and reports ruin and the terminal surplus
/// for capital `u`.
pub fn event_loop<R: Rng + ?Sized>(
    process: &Process,
    capital: f64,
    horizon: &Horizon,
    rng: &mut R,
) -> PathOutcome {
    let t = horizon.draw(rng);
    let path = sample_path(process, t, rng);
    PathOutcome {
        ruined: capital + path.min_level < 0.0,
        terminal_surplus: capital + path.terminal,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n / n;
        self.m2 += other.m2 + d * d * self.n * other.n / n;
        self.n = n;
    }

    fn estimate(&self, estimand: Estimand, capital: f64, seed: u64) -> SimEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        let sd = var.max(0.0).sqrt();
        let half = Z95 * sd / self.n.sqrt();
        SimEstimate {
            estimand,
            capital,
            mean: self.mean,
            std_dev: sd,
            half_width: half,
            ci_low: self.mean - half,
            ci_high: self.mean + half,
            n_paths: self.n as usize,
            seed,
        }
    }
}

/// Runs the configured simulation and returns one report per capital, in
/// the order of `config.capitals`.
pub fn simulate(config: &SimConfig) -> Result<Vec<SimReport>> {
    if config.n_paths == 0 {
        return Err(invalid("n_paths", "need at least one path"));
    }
    if !(config.horizon.mean().is_finite() && config.horizon.mean() > 0.0) {
        return Err(invalid("t", "horizon must be positive"));
    }
    if config.capitals.iter().any(|u| !u.is_finite()) {
        return Err(invalid("u", "capitals must be finite"));
    }
    config.process.validate()?;
    let m = config.capitals.len();
    let chunks = config.n_paths.div_ceil(CHUNK);
    let partial: Vec<Vec<[Welford; 3]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(config.n_paths - c * CHUNK);
            let mut acc = vec![[Welford::default(); 3]; m];
            for _ in 0..len {
                let t = config.horizon.draw(&mut rng);
                let path = sample_path(&config.process, t, &mut rng);
                for (a, &u) in acc.iter_mut().zip(&config.capitals) {
                    let ruined = u + path.min_level < 0.0;
                    let terminal = u + path.terminal;
                    a[0].push(if ruined { 1.0 } else { 0.0 });
                    a[1].push(if ruined { 0.0 } else { terminal });
                    a[2].push(terminal);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![[Welford::default(); 3]; m];
    for chunk in &partial {
        for (t, c) in total.iter_mut().zip(chunk) {
            for k in 0..3 {
                t[k].merge(&c[k]);
            }
        }
    }
    Ok(total
        .iter()
        .zip(&config.capitals)
        .map(|(w, &u)| SimReport {
            capital: u,
            ruin: w[0].estimate(Estimand::RuinProb, u, config.seed),
            value: w[1].estimate(Estimand::ExpectedSurplusNoRuin, u, config.seed),
            unconditional: w[2].estimate(Estimand::UnconditionalSurplus, u, config.seed),
        })
        .collect())
}

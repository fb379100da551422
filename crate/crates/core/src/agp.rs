//! Abel–Gontcharov polynomials and the ruin-time density of the lattice pool
//! over a deterministic horizon.
//!
//! Conditionally on `N_t = n` block arrivals, ruin happens exactly at `t` when
//! the `v_n`-th down-jump lands at `t` and, for every `k <= n`, the `k`-th
//! block arrived before the `v_{k-1}`-th down-jump. Here
//! `v_n = floor((u + n (b - w)) / w) + 1` is the first down-jump count whose
//! payouts exceed the capital plus `n` net block rewards. Given
//! `S_{v_n} = t`, the earlier down-jump epochs are `t` times the order
//! statistics of `v_n - 1` uniforms, so each series term is an expectation of
//! `(-1)^n G_n(0 | S_{v_0}/t, ..., S_{v_{n-1}}/t)` over that bridge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use statrs::distribution::{Continuous, Discrete, Erlang, Poisson};

use crate::error::{invalid, Error, Result};
use crate::model::PoolParams;
use crate::quad::kronrod_nodes;

/// Largest admissible `v_N`.
pub const SCALE_GUARD: u64 = 500;
/// `|G_n|` above this (nodes already scaled into `[0, 1]`) is treated as a
/// breakdown of the recursion.
pub const INSTABILITY_LIMIT: f64 = 1e12;
/// Poisson tail mass left out by the default truncation.
pub const DEFAULT_TAIL: f64 = 1e-6;

/// Node sequence `U = (u_1, u_2, ...)` of an Abel–Gontcharov family.
#[derive(Debug, Clone, PartialEq)]
pub struct AgpBasis {
    nodes: Vec<f64>,
}

impl AgpBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `G_0(x|U), ..., G_n(x|U)` through
    /// `G_m(x) = x^m - sum_{k<m} C(m,k) u_{k+1}^{m-k} G_k(x)`.
    pub fn eval_all(&self, n: usize, x: f64) -> Result<Vec<f64>> {
        if self.nodes.len() < n {
            return Err(Error::InsufficientNodes {
                degree: n,
                available: self.nodes.len(),
            });
        }
        let mut g = Vec::with_capacity(n + 1);
        g.push(1.0);
        // current row of Pascal's triangle
        let mut binom = vec![1.0f64];
        for m in 1..=n {
            let mut next = vec![1.0f64; m + 1];
            for k in 1..m {
                next[k] = binom[k - 1] + binom[k];
            }
            binom = next;
            let mut acc = x.powi(m as i32);
            for k in 0..m {
                acc -= binom[k] * self.nodes[k].powi((m - k) as i32) * g[k];
            }
            g.push(acc);
        }
        Ok(g)
    }

    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        Ok(self.eval_all(n, x)?[n])
    }
}

/// Degree-`n` Abel–Gontcharov polynomial attached to `nodes`, at `x`.
pub fn agp_eval(n: usize, x: f64, nodes: &[f64]) -> Result<f64> {
    if nodes.len() < n {
        return Err(Error::InsufficientNodes {
            degree: n,
            available: nodes.len(),
        });
    }
    AgpBasis::new(nodes[..n].to_vec()).eval(n, x)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn term_rng(seed: u64, n: usize, t: f64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed ^ n as u64) ^ t.to_bits()))
}

/// Monte Carlo frequency of `{U_{1:n} <= u_1, ..., U_{n:n} <= u_n}` for `n`
/// uniforms, with its standard error. Oracle for `(-1)^n G_n(0 | u)`.
pub fn order_statistics_frequency(nodes: &[f64], samples: usize, seed: u64) -> (f64, f64) {
    let n = nodes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed));
    let mut buf = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..samples {
        for v in buf.iter_mut() {
            *v = rng.random::<f64>();
        }
        buf.sort_by(f64::total_cmp);
        if buf.iter().zip(nodes).all(|(x, u)| x <= u) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

/// Index of the down-jump that ruins the pool after `n` block arrivals.
pub fn ruin_index(u: f64, b: f64, w: f64, n: usize) -> u64 {
    ((u + n as f64 * (b - w)) / w).floor() as u64 + 1
}

/// Smallest `N` with `P[N_t > N] < tail` for a Poisson count of mean `mean`.
pub fn poisson_truncation(mean: f64, tail: f64) -> usize {
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    let mut n = 0usize;
    while 1.0 - cdf >= tail && n < 100_000 {
        n += 1;
        pmf *= mean / n as f64;
        cdf += pmf;
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuinDensityEstimate {
    pub t: f64,
    pub density: f64,
    pub std_error: f64,
    pub truncation: usize,
    pub mc_samples: usize,
    /// Contribution of each `N_t = n` term.
    pub terms: Vec<f64>,
}

fn check_params(params: &PoolParams) -> Result<()> {
    if params.u() < 0.0 {
        return Err(invalid("u", "ruin is immediate for negative capital"));
    }
    Ok(())
}

/// Truncated-series estimate of the ruin-time density at `t`. `truncation`
/// defaults to the Poisson tail rule; each term `n >= 1` uses `mc_samples`
/// bridge samples with a stream derived from `(seed, n, t)`.
pub fn ruin_time_density(
    params: &PoolParams,
    t: f64,
    truncation: Option<usize>,
    mc_samples: usize,
    seed: u64,
) -> Result<RuinDensityEstimate> {
    check_params(params)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("t", format!("density time must be > 0, got {t}")));
    }
    if mc_samples == 0 {
        return Err(invalid("mc_samples", "need at least one sample"));
    }
    let (u, b, w) = (params.u(), params.b(), params.w());
    let lambda = params.lambda();
    let mu_d = params.mu_d();
    let big_n = truncation.unwrap_or_else(|| poisson_truncation(lambda * t, DEFAULT_TAIL));
    let v_last = ruin_index(u, b, w, big_n);
    if v_last > SCALE_GUARD {
        return Err(Error::ScaleGuard {
            index: v_last,
            limit: SCALE_GUARD,
        });
    }
    let poisson = Poisson::new(lambda * t).map_err(|e| invalid("lambda", e.to_string()))?;
    let terms: Vec<Result<(f64, f64)>> = (0..=big_n)
        .into_par_iter()
        .map(|n| {
            let v_n = ruin_index(u, b, w, n);
            let erlang = Erlang::new(v_n, mu_d).map_err(|e| invalid("mu_d", e.to_string()))?;
            let weight = erlang.pdf(t) * poisson.pmf(n as u64);
            if n == 0 {
                return Ok((weight, 0.0));
            }
            let idx: Vec<u64> = (0..n).map(|k| ruin_index(u, b, w, k)).collect();
            let mut rng = term_rng(seed, n, t);
            let mut spacings = vec![0.0f64; v_n as usize];
            let mut nodes = vec![0.0f64; n];
            let (mut mean, mut m2) = (0.0f64, 0.0f64);
            for s in 0..mc_samples {
                // S_j / t for j < v_n are partial sums of v_n exponential
                // spacings normalized by their total
                let mut total = 0.0;
                for e in spacings.iter_mut() {
                    *e = Exp1.sample(&mut rng);
                    total += *e;
                }
                let mut partial = 0.0;
                let mut k = 0;
                for (j, e) in spacings.iter().enumerate() {
                    partial += e;
                    while k < n && idx[k] == j as u64 + 1 {
                        nodes[k] = partial / total;
                        k += 1;
                    }
                }
                let g = AgpBasis::new(nodes.clone()).eval(n, 0.0)?;
                if !(g.abs() <= INSTABILITY_LIMIT) {
                    return Err(Error::InstabilityDetected {
                        degree: n,
                        magnitude: g.abs(),
                    });
                }
                let x = if n % 2 == 0 { g } else { -g };
                let delta = x - mean;
                mean += delta / (s + 1) as f64;
                m2 += delta * (x - mean);
            }
            let var = if mc_samples > 1 {
                m2 / (mc_samples - 1) as f64
            } else {
                0.0
            };
            Ok((weight * mean, weight * (var / mc_samples as f64).sqrt()))
        })
        .collect();
    let mut density = 0.0;
    let mut var = 0.0;
    let mut contributions = Vec::with_capacity(terms.len());
    for term in terms {
        let (value, se) = term?;
        density += value;
        var += se * se;
        contributions.push(value);
    }
    Ok(RuinDensityEstimate {
        t,
        density,
        std_error: var.sqrt(),
        truncation: big_n,
        mc_samples,
        terms: contributions,
    })
}

/// `int_0^horizon f_tau(s) ds`, the finite-horizon ruin probability, by
/// composite 15-point Kronrod integration over `panels` equal panels. The
/// standard error treats the density estimates at distinct nodes as independent.
pub fn ruin_probability_from_density(
    params: &PoolParams,
    horizon: f64,
    panels: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(horizon > 0.0) || panels == 0 {
        return Err(invalid("horizon", "need a positive horizon and at least one panel"));
    }
    let h = horizon / panels as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    for p in 0..panels {
        for (s, weight) in kronrod_nodes(p as f64 * h, (p + 1) as f64 * h) {
            let est = ruin_time_density(params, s, None, mc_samples, seed)?;
            value += weight * est.density;
            var += (weight * est.std_error).powi(2);
        }
    }
    Ok((value, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degrees() {
        let u = [0.3, 0.5, 0.9];
        assert_eq!(agp_eval(0, 2.0, &u).unwrap(), 1.0);
        assert!((agp_eval(1, 2.0, &u).unwrap() - 1.7).abs() < 1e-15);
        // G_2(x) = x^2 - 2 u_2 x + 2 u_1 u_2 - u_1^2
        let g2 = 4.0 - 2.0 * 0.5 * 2.0 + 2.0 * 0.3 * 0.5 - 0.09;
        assert!((agp_eval(2, 2.0, &u).unwrap() - g2).abs() < 1e-14);
    }

    #[test]
    fn vanishes_at_first_node() {
        let u: Vec<f64> = (1..=12).map(|i| 0.07 * i as f64).collect();
        for n in 1..=12 {
            assert!(agp_eval(n, u[0], &u).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn insufficient_nodes() {
        assert_eq!(
            agp_eval(3, 0.0, &[0.1, 0.2]),
            Err(Error::InsufficientNodes { degree: 3, available: 2 })
        );
    }

    #[test]
    fn ruin_index_is_strict() {
        // u = 1, w = 1: surplus 0 after one payout is not ruin
        assert_eq!(ruin_index(1.0, 3.0, 1.0, 0), 2);
        assert_eq!(ruin_index(0.0, 3.0, 1.0, 0), 1);
        assert_eq!(ruin_index(1.5, 3.0, 1.0, 1), 4);
    }

    #[test]
    fn poisson_tail_rule() {
        let n = poisson_truncation(2.0, 1e-6);
        let p = Poisson::new(2.0).unwrap();
        use statrs::distribution::DiscreteCDF;
        assert!(1.0 - p.cdf(n as u64) < 1e-6);
        assert!(1.0 - p.cdf(n as u64 - 1) >= 1e-6);
    }

    #[test]
    fn first_term_is_closed_form() {
        let p = PoolParams::from_rates(1.0, 2.0, 3.0, 1.0, 1.0, 2.0).unwrap();
        let est = ruin_time_density(&p, 0.7, Some(0), 10, 1).unwrap();
        let expected = Erlang::new(2, 2.0).unwrap().pdf(0.7) * (-0.7f64).exp();
        assert!((est.density - expected).abs() < 1e-15);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn degree_one_term_has_known_mean() {
        // E[S_{v_0}/t | S_{v_1} = t] = v_0 / v_1
        let p = PoolParams::from_rates(1.0, 2.0, 3.0, 1.0, 1.0, 2.0).unwrap();
        let est = ruin_time_density(&p, 0.9, Some(1), 40_000, 3).unwrap();
        let weight = Erlang::new(4, 2.0).unwrap().pdf(0.9) * Poisson::new(0.9).unwrap().pmf(1);
        let exact = weight * 2.0 / 4.0;
        assert!((est.terms[1] - exact).abs() < 4.0 * est.std_error + 1e-12);
    }

    #[test]
    fn scale_guard_rejects_large_instances() {
        let p = PoolParams::from_rates(0.6, 5.4, 1000.0, 98.0, 20000.0, 336.0).unwrap();
        assert!(matches!(
            ruin_time_density(&p, 336.0, None, 10, 0),
            Err(Error::ScaleGuard { .. })
        ));
    }
}

//! The eight acceptance criteria as runnable checks, shared by the
//! `acceptance` test target and `ppsruin verify`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agp::{agp_eval, order_statistics_frequency, ruin_probability_from_density};
use crate::mc_sim::{simulate, Horizon, Process, SimConfig};
use crate::miner::{break_even_capital, miner_det_solution, miner_stoch_solution, MinerMode};
use crate::model::{CombExp, PoolParams};
use crate::pool_det::{ruin_capital_threshold, solve_psi_hat_det, solve_v_hat_det, verify_recursion_det};
use crate::pool_stoch::{
    psi_infinite_horizon_exp, solve_psi_hat_stoch, solve_v_hat_stoch, verify_integral_equation,
    ExpPoolClosedForm,
};
use crate::rootkernel::{lundberg_roots, solve_cauchy_system, RootConfig};
use crate::scenario::Scenario;

/// Targets, tolerances and sample sizes of the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub threshold_target: u64,
    pub threshold_window: u64,
    pub threshold_level: f64,
    pub break_even_target: f64,
    pub break_even_rel: f64,
    pub closed_form_abs: f64,
    pub psi0_target: f64,
    pub psi0_abs: f64,
    pub mc_paths: usize,
    pub mc_max_misses: usize,
    pub seed: u64,
    pub recursion_tol: f64,
    pub recursion_u_max: u64,
    pub integral_tol: f64,
    pub integral_draws: usize,
    pub cauchy_rel: f64,
    pub cauchy_instances: usize,
    pub agp_tol: f64,
    pub agp_max_degree: usize,
    pub order_stat_sigmas: f64,
    pub order_stat_samples: usize,
    pub density_sigmas: f64,
    pub density_bridge_samples: usize,
    pub density_mc_paths: usize,
    pub monotone_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            threshold_target: 22594,
            threshold_window: 2,
            threshold_level: 0.05,
            break_even_target: 1255.0,
            break_even_rel: 0.05,
            closed_form_abs: 1e-10,
            psi0_target: 0.98820,
            psi0_abs: 1e-5,
            mc_paths: 1_000_000,
            mc_max_misses: 1,
            seed: 20_240_607,
            recursion_tol: 1e-6,
            recursion_u_max: 3000,
            integral_tol: 1e-6,
            integral_draws: 10,
            cauchy_rel: 1e-8,
            cauchy_instances: 50,
            agp_tol: 1e-9,
            agp_max_degree: 12,
            order_stat_sigmas: 4.0,
            order_stat_samples: 200_000,
            density_sigmas: 3.0,
            density_bridge_samples: 20_000,
            density_mc_paths: 1_000_000,
            monotone_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub budget: Duration,
    pub details: Vec<String>,
}

impl CriterionReport {
    /// One summary line: `criterion <id> PASS|FAIL <name> (<seconds>s)`.
    pub fn summary(&self) -> String {
        format!(
            "criterion {} {} {} ({:.2}s, budget {}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "ruin-capital threshold"),
    (2, "miner break-even"),
    (3, "exponential closed forms"),
    (4, "Monte Carlo oracle agreement"),
    (5, "recursion and integral-equation residuals"),
    (6, "Cauchy closed form vs direct solve"),
    (7, "Abel-Gontcharov suite"),
    (8, "ruin probability monotonicity"),
];

fn budget(id: u8) -> Duration {
    Duration::from_secs(match id {
        1 => 30,
        2 | 3 => 1,
        4 => 300,
        5 | 8 => 60,
        6 => 5,
        _ => 120,
    })
}

struct Checks {
    ok: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            ok: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, passed: bool, msg: String) {
        if !passed {
            self.ok = false;
        }
        self.details
            .push(format!("{} {msg}", if passed { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, msg: String) {
        self.details.push(format!("     {msg}"));
    }

    fn fail_on<T>(&mut self, r: crate::Result<T>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, format!("{what}: {e}"));
                None
            }
        }
    }
}

/// Runs one criterion by number (1 to 8).
pub fn run_criterion(id: u8, tol: &Tolerances) -> CriterionReport {
    let start = Instant::now();
    let mut c = Checks::new();
    match id {
        1 => threshold(&mut c, tol),
        2 => break_even(&mut c, tol),
        3 => closed_forms(&mut c, tol),
        4 => oracle(&mut c, tol),
        5 => residuals(&mut c, tol),
        6 => cauchy(&mut c, tol),
        7 => agp_suite(&mut c, tol),
        8 => monotonicity(&mut c, tol),
        _ => c.check(false, format!("unknown criterion {id}")),
    }
    let elapsed = start.elapsed();
    let within = elapsed <= budget(id);
    c.check(within, format!("runtime {:.2}s within {}s", elapsed.as_secs_f64(), budget(id).as_secs()));
    CriterionReport {
        id,
        name: CRITERIA
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, n)| *n)
            .unwrap_or("unknown"),
        passed: c.ok,
        elapsed,
        budget: budget(id),
        details: c.details,
    }
}

pub fn run_all(tol: &Tolerances) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id, tol)).collect()
}

fn reference_lattice() -> crate::Result<PoolParams> {
    Ok(Scenario::reference().lattice_pool_params()?.0)
}

fn threshold(c: &mut Checks, tol: &Tolerances) {
    let Some(params) = c.fail_on(reference_lattice(), "lattice parameters") else { return };
    let Some(psi) = c.fail_on(solve_psi_hat_det(&params), "solve psi") else { return };
    match ruin_capital_threshold(&psi, tol.threshold_level, 1 << 24) {
        Some(u) => {
            let dist = u.abs_diff(tol.threshold_target);
            c.note(format!(
                "psi({}) = {:.7}, psi({}) = {:.7}",
                u - 1,
                psi.eval_int(u as i64 - 1),
                u,
                psi.eval_int(u as i64)
            ));
            c.check(
                dist <= tol.threshold_window,
                format!("smallest u with psi < {} is {u}, target {} +- {}", tol.threshold_level, tol.threshold_target, tol.threshold_window),
            );
        }
        None => c.check(false, "psi never drops below the level".into()),
    }
}

fn break_even(c: &mut Checks, tol: &Tolerances) {
    let s = Scenario::reference();
    let Some(params) = c.fail_on(s.miner_params(), "miner parameters") else { return };
    let Some(pool) = c.fail_on(s.pool_params(), "pool parameters") else { return };
    let pooled = c.fail_on(miner_det_solution(&params, MinerMode::Pooled, pool.w()), "pooled");
    let solo = c.fail_on(miner_det_solution(&params, MinerMode::Solo, pool.b()), "solo");
    let (Some(pooled), Some(solo)) = (pooled, solo) else { return };
    c.note(format!("cost rate c = {:.6} MU/h", params.cost_rate()));
    match break_even_capital(&pooled, &solo, 1e4, 10_000) {
        Some(u) => {
            let rel = (u - tol.break_even_target).abs() / tol.break_even_target;
            c.check(
                rel <= tol.break_even_rel,
                format!("V_pooled - V_solo changes sign at u = {u:.3} ({:.2}% from {})", 100.0 * rel, tol.break_even_target),
            );
        }
        None => c.check(false, "no sign change on (0, 1e4]".into()),
    }
}

fn closed_forms(c: &mut Checks, tol: &Tolerances) {
    let s = Scenario::reference();
    let Some(params) = c.fail_on(s.pool_params(), "pool parameters") else { return };
    let (Some(law), Some(a)) = (c.fail_on(s.share_law(), "law"), c.fail_on(s.block_scale(), "scale")) else { return };
    let v = c.fail_on(solve_v_hat_stoch(&params, &law, a), "V");
    let psi = c.fail_on(solve_psi_hat_stoch(&params, &law, a), "psi");
    let (Some(v), Some(psi)) = (v, psi) else { return };
    let alpha = law.rates()[0];
    let beta = v.block_law().rates()[0];
    let Some(cf) = c.fail_on(
        ExpPoolClosedForm::new(params.lambda(), params.mu_d(), params.t(), alpha, beta),
        "closed form",
    ) else {
        return;
    };
    for u in [0.0, 1e2, 1e3, 1e4] {
        let dv = (v.eval(u) - cf.v_hat(u)).abs();
        let dp = (psi.eval(u) - cf.psi_hat(u)).abs();
        c.check(dv <= tol.closed_form_abs, format!("|V - V_exp| at u = {u}: {dv:.3e}"));
        c.check(dp <= tol.closed_form_abs, format!("|psi - psi_exp| at u = {u}: {dp:.3e}"));
    }
    match psi_infinite_horizon_exp(params.lambda(), params.mu_d(), 1.0 / 98.0, 1.0 / 1000.0) {
        Ok(inf) => c.check(
            (inf.at_zero - tol.psi0_target).abs() <= tol.psi0_abs,
            format!("infinite-horizon psi(0) = {:.7}, target {}", inf.at_zero, tol.psi0_target),
        ),
        Err(e) => c.check(false, format!("infinite horizon: {e}")),
    }
}

fn oracle(c: &mut Checks, tol: &Tolerances) {
    let s = Scenario::reference();
    let Some(lattice) = c.fail_on(reference_lattice(), "lattice") else { return };
    let Some(params) = c.fail_on(s.pool_params(), "pool") else { return };
    let (Some(law), Some(a)) = (c.fail_on(s.share_law(), "law"), c.fail_on(s.block_scale(), "scale")) else { return };
    let Some(miner) = c.fail_on(s.miner_params(), "miner") else { return };
    let horizon = Horizon::Exponential(params.t());
    let mut misses = 0usize;
    let mut total = 0usize;
    let mut stream = 0u64;
    // Capitals of one process share paths; separate processes get unrelated
    // seeds so their misses are independent.
    let mut run = |c: &mut Checks, label: &str, process: Process, grid: Vec<f64>, analytic: &dyn Fn(f64) -> f64| {
        stream += 1;
        let cfg = SimConfig {
            process,
            capitals: grid,
            horizon,
            n_paths: tol.mc_paths,
            seed: tol.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        };
        match simulate(&cfg) {
            Ok(reports) => {
                for r in reports {
                    let x = analytic(r.capital);
                    let inside = r.ruin.contains(x);
                    total += 1;
                    if !inside {
                        misses += 1;
                    }
                    c.note(format!(
                        "{label} u = {}: psi = {x:.6}, MC 95% CI [{:.6}, {:.6}]{}",
                        r.capital,
                        r.ruin.ci_low,
                        r.ruin.ci_high,
                        if inside { "" } else { "  (outside)" }
                    ));
                }
            }
            Err(e) => c.check(false, format!("{label}: {e}")),
        }
    };
    if let Some(sol) = c.fail_on(solve_psi_hat_det(&lattice), "pool_det") {
        run(c, "pool_det", Process::pool_det(&lattice), vec![0.0, 10_000.0, 22_594.0, 30_000.0, 40_000.0], &|u| {
            sol.eval_int(u as i64)
        });
    }
    if let Some(sol) = c.fail_on(solve_psi_hat_stoch(&params, &law, a), "pool_stoch") {
        if let Some(process) = c.fail_on(Process::pool_stoch(&params, &law, a), "process") {
            run(c, "pool_stoch", process, vec![0.0, 5_000.0, 10_000.0, 20_000.0, 30_000.0], &|u| sol.eval(u));
        }
    }
    let miner_grid = vec![25.0, 50.0, 100.0, 200.0, 400.0];
    if let Some(sol) = c.fail_on(miner_det_solution(&miner, MinerMode::Pooled, params.w()), "miner_det") {
        run(c, "miner_det", Process::miner_pooled(&miner, params.w()), miner_grid.clone(), &|u| sol.psi_hat(u));
    }
    if let Some(sol) = c.fail_on(miner_stoch_solution(&miner, MinerMode::Pooled, &law), "miner_stoch") {
        run(c, "miner_stoch", Process::miner_stoch(&miner, &law), miner_grid, &|u| sol.psi_hat(u));
    }
    c.check(
        total == 20 && misses <= tol.mc_max_misses,
        format!("{misses} of {total} grid points outside the 95% band (allowed {})", tol.mc_max_misses),
    );
}

/// Random pool intensities and a combination of exponentials of order `n`
/// with positive weights.
fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> (PoolParams, CombExp, f64) {
    loop {
        let lambda = rng.random_range(0.5..3.0);
        let mu_d = rng.random_range(0.5..5.0);
        let t = rng.random_range(0.5..50.0);
        let a = rng.random_range(1.5..8.0);
        let mut rates = Vec::with_capacity(n);
        let mut r = rng.random_range(0.2..2.0);
        for _ in 0..n {
            rates.push(r);
            r *= rng.random_range(1.5..4.0);
        }
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let last = 1.0 - weights[..n - 1].iter().sum::<f64>();
        weights[n - 1] = last;
        let params = PoolParams::from_rates(lambda, mu_d, 2.0, 1.0, 0.0, t).expect("valid draw");
        if let Ok(law) = CombExp::new(weights, rates) {
            return (params, law, a);
        }
    }
}

fn residuals(c: &mut Checks, tol: &Tolerances) {
    if let Ok(params) = reference_lattice() {
        for (label, sol) in [("V", solve_v_hat_det(&params)), ("psi", solve_psi_hat_det(&params))] {
            if let Some(sol) = c.fail_on(sol, label) {
                let rep = verify_recursion_det(&sol, &params, tol.recursion_u_max);
                c.check(
                    rep.max_scaled < tol.recursion_tol && rep.passed,
                    format!(
                        "{label} difference equation on [0, {}]: max scaled residual {:.3e} (u = {})",
                        tol.recursion_u_max, rep.max_scaled, rep.worst_u
                    ),
                );
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed ^ 0x5EED_0005);
    for n in 1..=3 {
        let mut worst = 0.0f64;
        for _ in 0..tol.integral_draws {
            let (params, law, a) = random_instance(&mut rng, n);
            let grid: Vec<f64> = [0.0, 0.5, 2.0, 5.0].iter().map(|x| x / law.rates()[0]).collect();
            for sol in [solve_v_hat_stoch(&params, &law, a), solve_psi_hat_stoch(&params, &law, a)] {
                match sol {
                    Ok(sol) => {
                        let rep = verify_integral_equation(&sol, &params, &grid);
                        worst = worst.max(rep.max_relative);
                    }
                    Err(e) => c.check(false, format!("n = {n}: {e}")),
                }
            }
        }
        c.check(
            worst < tol.integral_tol,
            format!("integral equation, n = {n}, {} draws: max relative residual {worst:.3e}", tol.integral_draws),
        );
    }
}

fn cauchy(c: &mut Checks, tol: &Tolerances) {
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed ^ 0x5EED_0006);
    let mut done = 0usize;
    let mut worst = 0.0f64;
    let mut skipped = 0usize;
    let mut attempts = 0usize;
    while done < tol.cauchy_instances && attempts < 10 * tol.cauchy_instances {
        attempts += 1;
        let n = 1 + attempts % 3;
        let (params, law, a) = random_instance(&mut rng, n);
        let roots = match lundberg_roots(params.lambda(), params.mu_d(), params.t(), &law, a, &RootConfig::default()) {
            Ok(r) => r,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let alphas = law.rates();
        let v_rhs: Vec<_> = alphas
            .iter()
            .map(|x| num_complex::Complex64::new(1.0 / (x * x) - rng.random_range(-5.0..5.0) / x, 0.0))
            .collect();
        let psi_rhs: Vec<_> = alphas.iter().map(|x| num_complex::Complex64::new(1.0 / x, 0.0)).collect();
        let mut well_separated = true;
        for rhs in [v_rhs, psi_rhs] {
            match solve_cauchy_system(alphas, roots.roots(), &rhs) {
                Ok(sol) if sol.closed_form.is_some() => worst = worst.max(sol.agreement),
                Ok(_) => well_separated = false,
                Err(e) => {
                    c.check(false, format!("instance {attempts}: {e}"));
                }
            }
        }
        if well_separated {
            done += 1;
        } else {
            skipped += 1;
        }
    }
    c.note(format!("{skipped} draws skipped as not well separated"));
    c.check(
        done == tol.cauchy_instances && worst <= tol.cauchy_rel,
        format!("{done} instances, max relative disagreement {worst:.3e}"),
    );
}

fn agp_suite(c: &mut Checks, tol: &Tolerances) {
    let mut rng = ChaCha8Rng::seed_from_u64(tol.seed ^ 0x5EED_0007);
    let mut worst_boundary = 0.0f64;
    let mut worst_linear = 0.0f64;
    for _ in 0..20 {
        let mut u: Vec<f64> = (0..tol.agp_max_degree).map(|_| rng.random_range(0.0..1.0)).collect();
        u.sort_by(f64::total_cmp);
        let shift = rng.random_range(-2.0..2.0);
        let scale = rng.random_range(0.2..3.0);
        let x = rng.random_range(-1.0..2.0);
        let moved: Vec<f64> = u.iter().map(|v| shift + scale * v).collect();
        for n in 1..=tol.agp_max_degree {
            if let (Ok(g), Ok(lhs), Ok(rhs)) = (
                agp_eval(n, u[0], &u),
                agp_eval(n, x, &moved),
                agp_eval(n, (x - shift) / scale, &u),
            ) {
                worst_boundary = worst_boundary.max(g.abs() / u[0].abs().powi(n as i32).max(1.0));
                let rhs = scale.powi(n as i32) * rhs;
                worst_linear = worst_linear.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            } else {
                c.check(false, format!("evaluation failed at degree {n}"));
            }
        }
    }
    c.check(worst_boundary <= tol.agp_tol, format!("G_n(u_1|U) max {worst_boundary:.3e} for n <= {}", tol.agp_max_degree));
    c.check(worst_linear <= tol.agp_tol, format!("linear transform max relative gap {worst_linear:.3e}"));

    let mut worst_sigma = 0.0f64;
    for n in 1..=6 {
        let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        u.sort_by(f64::total_cmp);
        let g = agp_eval(n, 0.0, &u).unwrap_or(f64::NAN);
        let p = if n % 2 == 0 { g } else { -g };
        let (freq, _) = order_statistics_frequency(&u, tol.order_stat_samples, tol.seed.wrapping_add(n as u64));
        let se = (p * (1.0 - p) / tol.order_stat_samples as f64).sqrt().max(f64::MIN_POSITIVE);
        let sigmas = (freq - p).abs() / se;
        worst_sigma = worst_sigma.max(sigmas);
        c.note(format!("n = {n}: (-1)^n G_n(0|u) = {p:.5}, frequency {freq:.5} ({sigmas:.2} se)"));
    }
    c.check(worst_sigma <= tol.order_stat_sigmas, format!("order statistics identity within {worst_sigma:.2} se"));

    let Ok(small) = PoolParams::from_rates(1.0, 2.0, 3.0, 1.0, 1.0, 2.0) else { return };
    let horizon = 2.0;
    let Some((dens, dens_se)) = c.fail_on(
        ruin_probability_from_density(&small, horizon, 2, tol.density_bridge_samples, tol.seed),
        "density",
    ) else {
        return;
    };
    let cfg = SimConfig {
        process: Process::pool_det(&small),
        capitals: vec![small.u()],
        horizon: Horizon::Fixed(horizon),
        n_paths: tol.density_mc_paths,
        seed: tol.seed,
    };
    if let Some(r) = c.fail_on(simulate(&cfg), "finite-horizon MC") {
        let mc = &r[0].ruin;
        let se = (dens_se * dens_se + mc.std_error().powi(2)).sqrt();
        let sigmas = (dens - mc.mean).abs() / se;
        c.check(
            sigmas <= tol.density_sigmas,
            format!(
                "int_0^{horizon} f_tau = {dens:.5} (se {dens_se:.1e}) vs MC ruin frequency {:.5} (se {:.1e}): {sigmas:.2} se",
                mc.mean,
                mc.std_error()
            ),
        );
    }
}

fn monotone(values: &[f64], tol: f64) -> Option<usize> {
    values.windows(2).position(|w| w[1] > w[0] + tol)
}

fn monotonicity(c: &mut Checks, tol: &Tolerances) {
    let base = Scenario::reference();
    let u_fixed = 20_000.0;
    let psi_det = |s: &Scenario, u: f64| -> crate::Result<f64> {
        let (p, _) = s.lattice_pool_params()?;
        solve_psi_hat_det(&p)?.eval(u)
    };
    let psi_stoch = |s: &Scenario, u: f64| -> crate::Result<f64> {
        Ok(solve_psi_hat_stoch(&s.pool_params()?, &s.share_law()?, s.block_scale()?)?.eval(u))
    };
    // along u
    if let (Some(p), Some(params)) = (c.fail_on(reference_lattice(), "lattice"), c.fail_on(base.pool_params(), "pool")) {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 100.0).collect();
        if let Some(sol) = c.fail_on(solve_psi_hat_det(&p), "det") {
            let vals: Vec<f64> = grid.iter().map(|u| sol.eval_int(*u as i64)).collect();
            let lattice: Vec<f64> = (0..=3000).map(|u| sol.eval_int(u)).collect();
            c.check(
                monotone(&vals, tol.monotone_tol).is_none() && monotone(&lattice, tol.monotone_tol).is_none(),
                "lattice psi nonincreasing in u on [0, 40000] step 100 and on every integer of [0, 3000]".into(),
            );
        }
        if let (Some(law), Some(a)) = (c.fail_on(base.share_law(), "law"), c.fail_on(base.block_scale(), "a")) {
            if let Some(sol) = c.fail_on(solve_psi_hat_stoch(&params, &law, a), "stoch") {
                let vals: Vec<f64> = grid.iter().map(|u| sol.eval(*u)).collect();
                c.check(monotone(&vals, tol.monotone_tol).is_none(), "random-reward psi nonincreasing in u".into());
            }
        }
    }
    // along f and q
    type Eval<'a> = &'a dyn Fn(&Scenario, f64) -> crate::Result<f64>;
    let evaluators: [(&str, Eval); 2] = [("lattice", &psi_det), ("random-reward", &psi_stoch)];
    for (label, eval) in evaluators {
        let fees: Vec<f64> = (0..=10).map(|k| k as f64 * 0.01).collect();
        let vals: crate::Result<Vec<f64>> = fees
            .iter()
            .map(|f| {
                let mut s = base.clone();
                s.pool.f = *f;
                eval(&s, u_fixed)
            })
            .collect();
        if let Some(vals) = c.fail_on(vals, "f sweep") {
            c.check(
                monotone(&vals, tol.monotone_tol).is_none(),
                format!("{label} psi(u = {u_fixed}) nonincreasing in f on [0, 0.1]: {:.5} .. {:.5}", vals[0], vals[vals.len() - 1]),
            );
        }
        let qs: Vec<f64> = (1..=6).map(|k| k as f64 * 0.05).collect();
        let vals: crate::Result<Vec<f64>> = qs
            .iter()
            .map(|q| {
                let mut s = base.clone();
                s.network.q = *q;
                s.network.mu = s.network.lambda / q;
                eval(&s, u_fixed)
            })
            .collect();
        if let Some(vals) = c.fail_on(vals, "q sweep") {
            c.check(
                monotone(&vals, tol.monotone_tol).is_none(),
                format!("{label} psi(u = {u_fixed}) nonincreasing in q on [0.05, 0.3]: {:.5} .. {:.5}", vals[0], vals[vals.len() - 1]),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_detects_increase() {
        assert_eq!(monotone(&[3.0, 2.0, 2.0, 1.0], 1e-9), None);
        assert_eq!(monotone(&[3.0, 2.0, 2.5], 1e-9), Some(1));
    }

    #[test]
    fn tightened_threshold_window_fails() {
        let tol = Tolerances {
            threshold_target: 22_600,
            threshold_window: 0,
            ..Tolerances::default()
        };
        assert!(!run_criterion(1, &tol).passed);
    }

    #[test]
    fn tolerances_deserialize_partially() {
        let t: Tolerances = serde_json::from_str(r#"{"mc_paths": 10}"#).unwrap();
        assert_eq!(t.mc_paths, 10);
        assert_eq!(t.threshold_target, 22594);
    }
}

//! Analytic values against the simulator, at three standard errors.

use ppsruin::mc_sim::{simulate, Horizon, Process, SimConfig, SimReport};
use ppsruin::miner::{miner_det_solution, miner_stoch_solution, MinerMode};
use ppsruin::model::{CombExp, PoolParams};
use ppsruin::pool_det::{solve_psi_hat_det, solve_v_hat_det};
use ppsruin::pool_stoch::{solve_psi_hat_stoch, solve_v_hat_stoch};
use ppsruin::scenario::Scenario;

const PATHS: usize = 200_000;

fn run(process: Process, capitals: &[f64], t: f64, seed: u64) -> Vec<SimReport> {
    simulate(&SimConfig {
        process,
        capitals: capitals.to_vec(),
        horizon: Horizon::Exponential(t),
        n_paths: PATHS,
        seed,
    })
    .unwrap()
}

fn within(label: &str, u: f64, analytic: f64, mean: f64, se: f64) {
    let tol = 3.0 * se + 1e-12;
    assert!(
        (analytic - mean).abs() <= tol,
        "{label} at u = {u}: analytic {analytic}, simulated {mean} +- {se}"
    );
}

#[test]
fn lattice_pool_value_and_ruin() {
    let (p, _) = Scenario::reference().lattice_pool_params().unwrap();
    let v = solve_v_hat_det(&p).unwrap();
    let psi = solve_psi_hat_det(&p).unwrap();
    for r in run(Process::pool_det(&p), &[0.0, 5000.0, 20_000.0, 40_000.0], p.t(), 101) {
        let u = r.capital as i64;
        within("V", r.capital, v.eval_int(u), r.value.mean, r.value.std_error());
        within("psi", r.capital, psi.eval_int(u), r.ruin.mean, r.ruin.std_error());
    }
}

#[test]
fn random_reward_pool_value_and_ruin() {
    let s = Scenario::reference();
    let p = s.pool_params().unwrap();
    let law = s.share_law().unwrap();
    let a = s.block_scale().unwrap();
    let v = solve_v_hat_stoch(&p, &law, a).unwrap();
    let psi = solve_psi_hat_stoch(&p, &law, a).unwrap();
    let process = Process::pool_stoch(&p, &law, a).unwrap();
    for r in run(process, &[0.0, 5000.0, 20_000.0], p.t(), 102) {
        within("V", r.capital, v.eval(r.capital), r.value.mean, r.value.std_error());
        within("psi", r.capital, psi.eval(r.capital), r.ruin.mean, r.ruin.std_error());
    }
}

#[test]
fn mixed_law_pool_matches_simulation() {
    let law = CombExp::new(vec![1.5, -0.5], vec![0.02, 0.05]).unwrap();
    let p = PoolParams::from_rates(0.6, 5.4, 2.0, 1.0, 0.0, 336.0).unwrap();
    let a = 8.0;
    let v = solve_v_hat_stoch(&p, &law, a).unwrap();
    let psi = solve_psi_hat_stoch(&p, &law, a).unwrap();
    let process = Process::pool_stoch(&p, &law, a).unwrap();
    for r in run(process, &[0.0, 200.0, 1000.0], p.t(), 103) {
        within("V", r.capital, v.eval(r.capital), r.value.mean, r.value.std_error());
        within("psi", r.capital, psi.eval(r.capital), r.ruin.mean, r.ruin.std_error());
    }
}

#[test]
fn short_horizon_value_exceeds_linear_bound() {
    let law = CombExp::new(vec![1.967221707188223, -0.967221707188223], vec![0.05, 0.075]).unwrap();
    let (lambda, mu_d, t, a) = (0.7666204811708409, 4.885827392682252, 0.5, 6.7004442982426795);
    let p = PoolParams::from_rates(lambda, mu_d, 2.0, 1.0, 0.0, t).unwrap();
    let v = solve_v_hat_stoch(&p, &law, a).unwrap();
    let d0 = t * (lambda * a - mu_d) * law.mean();
    assert!(v.eval(0.0) > d0 + 10.0);
    let process = Process::pool_stoch(&p, &law, a).unwrap();
    for r in run(process, &[0.0, 50.0], t, 104) {
        within("V", r.capital, v.eval(r.capital), r.value.mean, r.value.std_error());
    }
}

#[test]
fn miners_value_and_ruin() {
    let s = Scenario::reference();
    let m = s.miner_params().unwrap();
    let p = s.pool_params().unwrap();
    let grid = [0.0, 50.0, 200.0, 400.0];
    let pooled = miner_det_solution(&m, MinerMode::Pooled, p.w()).unwrap();
    let solo = miner_det_solution(&m, MinerMode::Solo, p.b()).unwrap();
    let law = s.share_law().unwrap();
    let stoch = miner_stoch_solution(&m, MinerMode::Pooled, &law).unwrap();
    let cases = [
        ("pooled", &pooled, Process::miner_pooled(&m, p.w())),
        ("solo", &solo, Process::miner_solo(&m, p.b())),
        ("random share", &stoch, Process::miner_stoch(&m, &law)),
    ];
    for (i, (label, sol, process)) in cases.into_iter().enumerate() {
        for r in run(process, &grid, m.t(), 200 + i as u64) {
            within(label, r.capital, sol.v_hat(r.capital), r.value.mean, r.value.std_error());
            within(label, r.capital, sol.psi_hat(r.capital), r.ruin.mean, r.ruin.std_error());
        }
    }
}

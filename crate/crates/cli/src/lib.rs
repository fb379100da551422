//! Command implementations behind the `ppsruin` binary. Every command renders
//! a CSV document: `#` comment lines carrying provenance and warnings, one
//! header row with snake_case columns, then the data rows.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppsruin::acceptance::{run_criterion, CriterionReport, Tolerances, CRITERIA};
use ppsruin::agp::ruin_time_density;
use ppsruin::mc_sim::{simulate, Horizon, Process, SimConfig, SimReport};
use ppsruin::miner::{break_even_capital, miner_det_solution, miner_stoch_solution, MinerMode, MinerSolution};
use ppsruin::pool_det::{ruin_capital_threshold, solve_psi_hat_det, solve_v_hat_det};
use ppsruin::pool_stoch::{solve_psi_hat_stoch, solve_v_hat_stoch};
use ppsruin::scenario::Scenario;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_MAX_POINTS: usize = 100_000;
/// Ruin level reported in the pool output.
pub const RUIN_LEVEL: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: ppsruin::Error,
    },
    #[error("bad grid '{0}': {1}")]
    Grid(String, String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

trait Context<T> {
    fn context(self, what: impl Display) -> CliResult<T>;
}

impl<T> Context<T> for ppsruin::Result<T> {
    fn context(self, what: impl Display) -> CliResult<T> {
        self.map_err(|source| CliError::Model {
            context: what.to_string(),
            source,
        })
    }
}

const AFTER_HELP: &str = "\
Output recipes:
  pool value and ruin probability against initial capital
      ppsruin pool --variant det|stoch --grid 0:40000:500 [--mc 100000]
  pool V-u and ruin probability against the fee, q or the pool share, one- or two-way
      ppsruin sweep --x f:0:0.1:0.005 [--y p_pool:0.05:0.3:0.05] --variant det|stoch
  pool quantities against initial capital at fixed parameters
      ppsruin sweep --x u:0:40000:1000
  individual miner alone versus inside the pool, value and ruin probability
      ppsruin miner --grid 0:3000:25 [--variant stoch]
  ruin-time density over a deterministic horizon (small instances only)
      ppsruin density --scenario scenarios/small_density.json --grid 0.05:2:0.05
  acceptance suite
      ppsruin verify

Without --scenario the built-in reference scenario is used (6 blocks/h, q = 0.1,
p_I = 0.1, f = 0.02, b = 1000 MU, u = 20000 MU, t = 336 h; miner p_i = 0.001,
u = 1000 MU). Money is in MU: 1000 MU = 6.25 BTC, 1 MU = 231.85 USD.
Columns are comma separated and `#` lines are comments, so gnuplot reads the
files with `set datafile separator ','`.";

#[derive(Debug, Parser)]
#[command(name = "ppsruin", version, about = "Ruin probabilities and expected surplus of Pay-per-Share pools and miners", after_help = AFTER_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pool value V(u) and ruin probability psi(u) on a capital grid.
    Pool(PoolArgs),
    /// One- or two-way sensitivity sweep of V - u and psi over u, f, q or the pool share p_pool.
    Sweep(SweepArgs),
    /// Miner alone versus inside the pool on a capital grid.
    Miner(MinerArgs),
    /// Ruin-time density over a deterministic horizon.
    Density(DensityArgs),
    /// Run the acceptance criteria; exit code 1 when any fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Deterministic rewards on the integer lattice (w rounded to an integer).
    Det,
    /// Rewards drawn from a combination of exponentials.
    Stoch,
}

impl Variant {
    fn name(self) -> &'static str {
        match self {
            Self::Det => "det",
            Self::Stoch => "stoch",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario JSON file [default: built-in reference scenario].
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of every random stream.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Largest number of grid points accepted.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct PoolArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Variant::Det)]
    pub variant: Variant,
    /// Capital grid start:stop:step.
    #[arg(long, default_value = "0:40000:1000")]
    pub grid: String,
    /// Add Monte Carlo columns from this many paths.
    #[arg(long)]
    pub mc: Option<usize>,
    /// With --mc, add ruin estimates for the fixed horizon T = t as well.
    #[arg(long)]
    pub fixed_horizon: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Variant::Det)]
    pub variant: Variant,
    /// First axis as name:start:stop:step with name one of u, f, q, p_pool (pool share p_I).
    #[arg(long, default_value = "f:0:0.1:0.01")]
    pub x: String,
    /// Optional second axis, same format; rows come out in long format.
    #[arg(long)]
    pub y: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct MinerArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = Variant::Det)]
    pub variant: Variant,
    #[arg(long, default_value = "0:3000:50")]
    pub grid: String,
    #[arg(long)]
    pub mc: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Time grid start:stop:step (hours).
    #[arg(long, default_value = "0.1:2:0.1")]
    pub grid: String,
    /// Number of series terms kept [default: Poisson tail below 1e-6].
    #[arg(long)]
    pub terms: Option<usize>,
    /// Bridge samples per series term.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    /// Add the simulated ruin probability by each t from this many paths.
    #[arg(long)]
    pub mc: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// JSON file overriding acceptance tolerances and sample sizes.
    #[arg(long)]
    pub tolerances: Option<PathBuf>,
    /// Comma-separated criterion numbers [default: all].
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    /// Override the Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print each check under the summary line.
    #[arg(long)]
    pub verbose: bool,
}

/// Inclusive arithmetic grid; empty when `start > stop`.
pub fn parse_grid(text: &str, cap: usize) -> CliResult<Vec<f64>> {
    let bad = |why: &str| CliError::Grid(text.to_string(), why.to_string());
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(bad("expected start:stop:step"));
    };
    let num = |s: &str| f64::from_str(s.trim()).map_err(|_| bad(&format!("'{s}' is not a number")));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(start.is_finite() && stop.is_finite()) {
        return Err(bad("bounds must be finite"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(bad("step must be positive"));
    }
    if start > stop {
        return Ok(Vec::new());
    }
    let count = ((stop - start) / step * (1.0 + 1e-12)).floor() + 1.0;
    if count > cap as f64 {
        return Err(bad(&format!("{count} points exceed the cap of {cap}")));
    }
    Ok((0..count as usize).map(|i| snap(start + i as f64 * step)).collect())
}

/// Rounds to 13 significant digits, removing accumulated step error.
fn snap(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

pub fn load_scenario(path: Option<&Path>) -> CliResult<(Scenario, String)> {
    match path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            let text = String::from_utf8_lossy(&bytes);
            let scenario = Scenario::from_json(&text).context(p.display())?;
            Ok((scenario, sha256_hex(&bytes)))
        }
        None => {
            let s = Scenario::reference();
            let hash = sha256_hex(s.to_json().as_bytes());
            Ok((s, hash))
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Comment block followed by the CSV table.
struct Table {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(command: &str, hash: &str, seed: Option<u64>) -> Self {
        let mut comments = vec![
            format!("ppsruin {VERSION}"),
            format!("command {command}"),
            format!("scenario_sha256 {hash}"),
        ];
        if let Some(seed) = seed {
            comments.push(format!("seed {seed}"));
        }
        Self {
            comments,
            header: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    fn warn(&mut self, line: impl Display) {
        self.comments.push(format!("warning {line}"));
    }

    fn columns(&mut self, names: &[&str]) {
        self.header.extend(names.iter().map(|s| s.to_string()));
    }

    fn row(&mut self, values: &[f64]) {
        // Debug switches to exponent notation for very large and small magnitudes.
        self.rows.push(values.iter().map(|v| format!("{v:?}")).collect());
    }

    fn render(self) -> CliResult<String> {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
        out.push_str(&String::from_utf8_lossy(&body));
        Ok(out)
    }
}

fn mc_columns(prefix: &str) -> [String; 3] {
    [prefix.to_string(), format!("{prefix}_low"), format!("{prefix}_high")]
}

fn run_mc(process: Process, capitals: &[f64], horizon: Horizon, n_paths: usize, seed: u64) -> CliResult<Vec<SimReport>> {
    if capitals.is_empty() {
        return Ok(Vec::new());
    }
    simulate(&SimConfig {
        process,
        capitals: capitals.to_vec(),
        horizon,
        n_paths,
        seed,
    })
    .context("simulation")
}

/// Smallest integer capital where a nonincreasing `f` drops below `level`.
fn first_capital_below(f: impl Fn(f64) -> f64, level: f64, cap: u64) -> Option<u64> {
    if f(0.0) < level {
        return Some(0);
    }
    let mut hi = 1u64;
    while f(hi as f64) >= level {
        hi = hi.checked_mul(2)?;
        if hi > cap {
            return None;
        }
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid as f64) < level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Two evaluators for `(V, psi)` of the pool under one variant.
type PoolEval = Box<dyn Fn(f64) -> CliResult<(f64, f64)>>;

fn pool_evaluator(scenario: &Scenario, variant: Variant, table: &mut Table) -> CliResult<(PoolEval, Process, f64)> {
    match variant {
        Variant::Det => {
            let (params, shift) = scenario.lattice_pool_params().context("pool parameters")?;
            table.comment(format!("w_rounding {shift}"));
            table.comment(format!("w {}", params.w()));
            if !params.net_profit_holds() {
                table.warn("net profit condition lambda b > mu w fails");
            }
            let v = solve_v_hat_det(&params).context("value solve")?;
            let psi = solve_psi_hat_det(&params).context("ruin solve")?;
            for msg in [v.warning(), psi.warning()].into_iter().flatten() {
                table.warn(msg);
            }
            let threshold = ruin_capital_threshold(&psi, RUIN_LEVEL, 1 << 32);
            table.comment(match threshold {
                Some(u) => format!("psi_below_{RUIN_LEVEL}_from_u {u}"),
                None => format!("psi_below_{RUIN_LEVEL}_from_u none"),
            });
            let process = Process::pool_det(&params);
            let t = params.t();
            let eval = move |u: f64| -> CliResult<(f64, f64)> {
                Ok((
                    v.eval(u).context(format_args!("capital {u}"))?,
                    psi.eval(u).context(format_args!("capital {u}"))?,
                ))
            };
            Ok((Box::new(eval), process, t))
        }
        Variant::Stoch => {
            let params = scenario.pool_params().context("pool parameters")?;
            let law = scenario.share_law().context("share law")?;
            let a = scenario.block_scale().context("block scale")?;
            if !params.net_profit_holds() {
                table.warn("net profit condition lambda b > mu w fails");
            }
            let v = solve_v_hat_stoch(&params, &law, a).context("value solve")?;
            let psi = solve_psi_hat_stoch(&params, &law, a).context("ruin solve")?;
            for msg in [v.warning(), psi.warning()].into_iter().flatten() {
                table.warn(msg);
            }
            table.comment(format!("block_scale {a}"));
            let threshold = first_capital_below(|u| psi.eval(u), RUIN_LEVEL, 1 << 32);
            table.comment(match threshold {
                Some(u) => format!("psi_below_{RUIN_LEVEL}_from_u {u}"),
                None => format!("psi_below_{RUIN_LEVEL}_from_u none"),
            });
            let process = Process::pool_stoch(&params, &law, a).context("simulation setup")?;
            let t = params.t();
            Ok((Box::new(move |u| Ok((v.eval(u), psi.eval(u)))), process, t))
        }
    }
}

pub fn cmd_pool(args: &PoolArgs) -> CliResult<String> {
    let (scenario, hash) = load_scenario(args.common.scenario.as_deref())?;
    let grid = parse_grid(&args.grid, args.common.max_points)?;
    let seed = args.mc.map(|_| args.common.seed);
    let mut table = Table::new(&format!("pool variant={}", args.variant.name()), &hash, seed);
    let (eval, process, t) = pool_evaluator(&scenario, args.variant, &mut table)?;
    table.columns(&["u", "v_hat", "psi_hat", "v_hat_minus_u"]);
    let mut analytic = Vec::with_capacity(grid.len());
    for &u in &grid {
        analytic.push(eval(u)?);
    }
    let mut extra: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    if let Some(n) = args.mc {
        for name in ["v_mc", "psi_mc"] {
            let cols = mc_columns(name);
            table.columns(&cols.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let reports = run_mc(process.clone(), &grid, Horizon::Exponential(t), n, args.common.seed)?;
        for (row, r) in extra.iter_mut().zip(&reports) {
            row.extend([r.value.mean, r.value.ci_low, r.value.ci_high, r.ruin.mean, r.ruin.ci_low, r.ruin.ci_high]);
        }
        if args.fixed_horizon {
            let cols = mc_columns("psi_mc_fixed");
            table.columns(&cols.iter().map(String::as_str).collect::<Vec<_>>());
            let reports = run_mc(process, &grid, Horizon::Fixed(t), n, args.common.seed)?;
            for (row, r) in extra.iter_mut().zip(&reports) {
                row.extend([r.ruin.mean, r.ruin.ci_low, r.ruin.ci_high]);
            }
        }
    } else if args.fixed_horizon {
        return Err(CliError::Usage("--fixed-horizon needs --mc".into()));
    }
    for ((u, (v, p)), more) in grid.iter().zip(analytic).zip(extra) {
        let mut row = vec![*u, v, p, v - u];
        row.extend(more);
        table.row(&row);
    }
    table.render()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    U,
    F,
    Q,
    PoolShare,
}

impl Axis {
    fn column(self) -> &'static str {
        match self {
            Self::U => "u",
            Self::F => "f",
            Self::Q => "q",
            Self::PoolShare => "p_pool",
        }
    }

    /// Applies the value; `q` keeps the block rate and rescales the share rate.
    fn apply(self, s: &mut Scenario, value: f64) {
        match self {
            Self::U => s.pool.u = value,
            Self::F => s.pool.f = value,
            Self::Q => {
                s.network.q = value;
                s.network.mu = s.network.lambda / value;
            }
            Self::PoolShare => s.pool.p_pool = value,
        }
    }
}

/// Parses `name:start:stop:step`.
pub fn parse_axis(text: &str, cap: usize) -> CliResult<(Axis, Vec<f64>)> {
    let (name, grid) = text
        .split_once(':')
        .ok_or_else(|| CliError::Grid(text.into(), "expected name:start:stop:step".into()))?;
    let axis = match name.trim() {
        "u" => Axis::U,
        "f" => Axis::F,
        "q" => Axis::Q,
        "p_pool" | "p_I" => Axis::PoolShare,
        other => return Err(CliError::Grid(text.into(), format!("unknown axis '{other}', use u, f, q or p_pool"))),
    };
    Ok((axis, parse_grid(grid, cap)?))
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let (base, hash) = load_scenario(args.common.scenario.as_deref())?;
    let cap = args.common.max_points;
    let (x_axis, xs) = parse_axis(&args.x, cap)?;
    let y = args.y.as_deref().map(|y| parse_axis(y, cap)).transpose()?;
    let total = xs.len() * y.as_ref().map_or(1, |(_, ys)| ys.len());
    if total > cap {
        return Err(CliError::Grid(args.x.clone(), format!("{total} grid points exceed the cap of {cap}")));
    }
    let mut table = Table::new(&format!("sweep variant={}", args.variant.name()), &hash, None);
    let mut header = vec![x_axis.column()];
    if let Some((y_axis, _)) = &y {
        if *y_axis == x_axis {
            return Err(CliError::Usage("the two axes must differ".into()));
        }
        header.push(y_axis.column());
    }
    header.extend(["u", "w", "v_hat_minus_u", "psi_hat"]);
    table.columns(&header);
    let ys: Vec<Option<f64>> = match &y {
        Some((_, ys)) => ys.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut rounding_noted = false;
    for &x in &xs {
        for &yv in &ys {
            let mut s = base.clone();
            x_axis.apply(&mut s, x);
            if let (Some((y_axis, _)), Some(v)) = (&y, yv) {
                y_axis.apply(&mut s, v);
            }
            let at = match yv {
                Some(v) => format!("{}={x}, {}={v}", x_axis.column(), y.as_ref().map_or("", |(a, _)| a.column())),
                None => format!("{}={x}", x_axis.column()),
            };
            let u = s.pool.u;
            let (w, v, p) = match args.variant {
                Variant::Det => {
                    let (params, shift) = s.lattice_pool_params().context(&at)?;
                    if shift.abs() > 1e-9 && !rounding_noted {
                        table.comment("w_rounding share reward rounded to the nearest integer on some rows");
                        rounding_noted = true;
                    }
                    let v = solve_v_hat_det(&params).context(&at)?.eval(u).context(&at)?;
                    let p = solve_psi_hat_det(&params).context(&at)?.eval(u).context(&at)?;
                    (params.w(), v, p)
                }
                Variant::Stoch => {
                    let params = s.pool_params().context(&at)?;
                    let law = s.share_law().context(&at)?;
                    let a = s.block_scale().context(&at)?;
                    let v = solve_v_hat_stoch(&params, &law, a).context(&at)?.eval(u);
                    let p = solve_psi_hat_stoch(&params, &law, a).context(&at)?.eval(u);
                    (params.w(), v, p)
                }
            };
            let mut row = vec![x];
            row.extend(yv);
            row.extend([u, w, v - u, p]);
            table.row(&row);
        }
    }
    table.render()
}

fn miner_solutions(scenario: &Scenario, variant: Variant) -> CliResult<(MinerSolution, MinerSolution, Process, Process, f64)> {
    let params = scenario.miner_params().context("miner parameters")?;
    let pool = scenario.pool_params().context("pool parameters")?;
    match variant {
        Variant::Det => Ok((
            miner_det_solution(&params, MinerMode::Solo, pool.b()).context("solo miner")?,
            miner_det_solution(&params, MinerMode::Pooled, pool.w()).context("pooled miner")?,
            Process::miner_solo(&params, pool.b()),
            Process::miner_pooled(&params, pool.w()),
            params.t(),
        )),
        Variant::Stoch => {
            let share = scenario.share_law().context("share law")?;
            let block = share.scaled(scenario.block_scale().context("block scale")?).context("block law")?;
            Ok((
                miner_stoch_solution(&params, MinerMode::Solo, &block).context("solo miner")?,
                miner_stoch_solution(&params, MinerMode::Pooled, &share).context("pooled miner")?,
                Process::MinerStoch {
                    rate: params.solo_rate(),
                    law: block.clone(),
                    cost: params.cost_rate(),
                },
                Process::miner_stoch(&params, &share),
                params.t(),
            ))
        }
    }
}

pub fn cmd_miner(args: &MinerArgs) -> CliResult<String> {
    let (scenario, hash) = load_scenario(args.common.scenario.as_deref())?;
    let grid = parse_grid(&args.grid, args.common.max_points)?;
    let seed = args.mc.map(|_| args.common.seed);
    let mut table = Table::new(&format!("miner variant={}", args.variant.name()), &hash, seed);
    let (solo, pooled, solo_process, pooled_process, t) = miner_solutions(&scenario, args.variant)?;
    table.comment(format!("cost_rate_mu_per_hour {}", pooled.cost));
    for (name, sol) in [("solo", &solo), ("pooled", &pooled)] {
        if !sol.net_profit_holds() {
            table.warn(format!("{name} miner violates the net profit condition (income {} < cost {})", sol.rate * sol.jump_mean, sol.cost));
        }
    }
    table.comment(match break_even_capital(&pooled, &solo, 1e4, 10_000) {
        Some(u) => format!("break_even_u {u}"),
        None => "break_even_u none".to_string(),
    });
    table.columns(&["u", "v_solo", "v_pooled", "psi_solo", "psi_pooled"]);
    let mut extra: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    if let Some(n) = args.mc {
        for name in ["v_solo_mc", "v_pooled_mc", "psi_solo_mc", "psi_pooled_mc"] {
            let cols = mc_columns(name);
            table.columns(&cols.iter().map(String::as_str).collect::<Vec<_>>());
        }
        let solo_mc = run_mc(solo_process, &grid, Horizon::Exponential(t), n, args.common.seed)?;
        let pooled_mc = run_mc(pooled_process, &grid, Horizon::Exponential(t), n, args.common.seed.wrapping_add(1))?;
        for (i, row) in extra.iter_mut().enumerate() {
            for est in [&solo_mc[i].value, &pooled_mc[i].value, &solo_mc[i].ruin, &pooled_mc[i].ruin] {
                row.extend([est.mean, est.ci_low, est.ci_high]);
            }
        }
    }
    for (&u, more) in grid.iter().zip(extra) {
        let mut row = vec![u, solo.v_hat(u), pooled.v_hat(u), solo.psi_hat(u), pooled.psi_hat(u)];
        row.extend(more);
        table.row(&row);
    }
    table.render()
}

pub fn cmd_density(args: &DensityArgs) -> CliResult<String> {
    let (scenario, hash) = load_scenario(args.common.scenario.as_deref())?;
    let grid = parse_grid(&args.grid, args.common.max_points)?;
    let (params, shift) = scenario.lattice_pool_params().context("pool parameters")?;
    let mut table = Table::new("density", &hash, Some(args.common.seed));
    table.comment(format!("w_rounding {shift}"));
    table.comment(format!("samples_per_term {}", args.samples));
    table.columns(&["t", "density", "std_error", "terms"]);
    if args.mc.is_some() {
        table.columns(&mc_columns("ruin_prob_mc").iter().map(String::as_str).collect::<Vec<_>>());
    }
    for &t in &grid {
        let est = ruin_time_density(&params, t, args.terms, args.samples, args.common.seed).context(format_args!("t = {t}"))?;
        let mut row = vec![t, est.density, est.std_error, est.truncation as f64];
        if let Some(n) = args.mc {
            let r = run_mc(Process::pool_det(&params), &[params.u()], Horizon::Fixed(t), n, args.common.seed)?;
            row.extend([r[0].ruin.mean, r[0].ruin.ci_low, r[0].ruin.ci_high]);
        }
        table.row(&row);
    }
    table.render()
}

pub fn load_tolerances(path: Option<&Path>) -> CliResult<Tolerances> {
    match path {
        None => Ok(Tolerances::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Runs the selected criteria, printing as it goes.
pub fn cmd_verify(args: &VerifyArgs, mut out: impl std::io::Write) -> CliResult<Vec<CriterionReport>> {
    let mut tol = load_tolerances(args.tolerances.as_deref())?;
    if let Some(seed) = args.seed {
        tol.seed = seed;
    }
    let ids: Vec<u8> = if args.only.is_empty() {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    } else {
        args.only.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|(c, _)| c == *id)) {
        return Err(CliError::Usage(format!("no criterion {bad}; choose from 1 to {}", CRITERIA.len())));
    }
    let io = |e| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    let mut reports = Vec::new();
    for id in ids {
        let r = run_criterion(id, &tol);
        writeln!(out, "{}", r.summary()).map_err(io)?;
        if args.verbose || !r.passed {
            for d in &r.details {
                writeln!(out, "    {d}").map_err(io)?;
            }
        }
        reports.push(r);
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    writeln!(out, "{passed} of {} criteria passed", reports.len()).map_err(io)?;
    Ok(reports)
}

pub fn write_output(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:10:5", 10).unwrap(), vec![0.0, 5.0, 10.0]);
        let fine = parse_grid("0:1:0.1", 100).unwrap();
        assert_eq!(fine.len(), 11);
        assert_eq!(fine[3], 0.3);
        assert_eq!(parse_grid("7:7:1", 10).unwrap(), vec![7.0]);
        assert!(parse_grid("5:0:1", 10).unwrap().is_empty());
        assert!(parse_grid("0:100:1", 10).is_err());
        assert!(parse_grid("0:1", 10).is_err());
        assert!(parse_grid("0:1:0", 10).is_err());
        assert!(parse_grid("a:1:1", 10).is_err());
    }

    #[test]
    fn axis_parsing() {
        let (axis, xs) = parse_axis("p_pool:0.1:0.3:0.1", 10).unwrap();
        assert_eq!(axis, Axis::PoolShare);
        assert_eq!(xs.len(), 3);
        assert!(parse_axis("z:0:1:1", 10).is_err());
    }

    #[test]
    fn threshold_search_finds_first_crossing() {
        let f = |u: f64| (-u / 1000.0).exp();
        let u = first_capital_below(f, 0.05, 1 << 30).unwrap();
        assert!(f(u as f64) < 0.05 && f(u as f64 - 1.0) >= 0.05);
        assert_eq!(first_capital_below(|_| 1.0, 0.05, 1 << 10), None);
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

use std::process::ExitCode;

use clap::Parser;
use ppsruin_cli::{cmd_density, cmd_miner, cmd_pool, cmd_sweep, cmd_verify, write_output, Cli, CliResult, Command};

fn run(cli: Cli) -> CliResult<bool> {
    let (text, out) = match &cli.command {
        Command::Pool(a) => (cmd_pool(a)?, a.common.out.clone()),
        Command::Sweep(a) => (cmd_sweep(a)?, a.common.out.clone()),
        Command::Miner(a) => (cmd_miner(a)?, a.common.out.clone()),
        Command::Density(a) => (cmd_density(a)?, a.common.out.clone()),
        Command::Verify(a) => {
            let reports = cmd_verify(a, std::io::stdout().lock())?;
            return Ok(reports.iter().all(|r| r.passed));
        }
    };
    write_output(&text, out.as_deref())?;
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

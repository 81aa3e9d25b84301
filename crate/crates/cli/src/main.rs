mod args;
mod commands;
mod error;
mod output;

use clap::Parser;

use crate::args::{with_config_file, Cli, Command};

fn main() {
    let argv = match with_config_file(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Centrality(c) => commands::centrality(c),
        Command::Solve(c) => commands::solve(c),
        Command::SolveJoint(c) => commands::solve_joint(c),
        Command::SolveBudget(c) => commands::solve_budget(c),
        Command::Heuristic(c) => commands::heuristic(c),
        Command::McValidate(c) => commands::mc_validate(c),
        Command::Sweep(c) => commands::sweep(c),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

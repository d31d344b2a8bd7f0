mod args;
mod commands;
mod error;

use std::process::ExitCode;

use bpetrim::PretokenConfig;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliResult;

fn run(cli: &Cli) -> CliResult<()> {
    let config = PretokenConfig {
        lowercase: cli.lowercase,
        ..PretokenConfig::default()
    };
    match &cli.command {
        Command::Learn(a) => commands::learn_cmd(a, &config),
        Command::LearnJoint(a) => commands::learn_joint_cmd(a, &config),
        Command::Apply(a) => commands::apply_cmd(a, &config),
        Command::Trim(a) => commands::trim_cmd(a, &config),
        Command::Stats(a) => commands::stats_cmd(a, &config),
        Command::Heuristic(a) => commands::heuristic_cmd(a, &config),
        Command::SplitRare(a) => commands::split_rare_cmd(a, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bpetrim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

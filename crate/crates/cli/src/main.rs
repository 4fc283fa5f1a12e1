use clap::Parser;
use std::process::ExitCode;

mod args;
mod cmd_detect;
mod cmd_eval;
mod cmd_simulate;
mod cmd_sweep;
mod cmd_tile;
mod cmd_train;
mod config;
mod errors;
mod out;
mod resolve;

fn main() -> ExitCode {
    // clap itself exits with 2 on usage errors.
    let cli = args::Cli::parse();
    let result = match cli.command {
        args::Command::Simulate(a) => cmd_simulate::run(a),
        args::Command::TrainEncoder(a) => cmd_train::run(a),
        args::Command::DetectGroups(a) => cmd_detect::run(a),
        args::Command::EvalDet(a) => cmd_eval::run_det(a),
        args::Command::EvalMot(a) => cmd_eval::run_mot(a),
        args::Command::EvalGroup(a) => cmd_eval::run_group(a),
        args::Command::TilePlan(a) => cmd_tile::run(a),
        args::Command::Sweep(a) => cmd_sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit)
        }
    }
}

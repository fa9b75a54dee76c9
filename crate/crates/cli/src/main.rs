mod args;
mod batch;
mod commands;
mod error;
mod manifest;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    // SYMM_THREADS caps the worker pool; 0 or unset means automatic.
    if let Ok(value) = std::env::var("SYMM_THREADS") {
        if let Ok(threads) = value.trim().parse::<usize>() {
            if threads > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .ok();
            }
        }
    }

    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Metrics(args) => commands::cmd_metrics(args),
        Command::FitPlane(args) => commands::cmd_fit_plane(args),
        Command::Symmetrize(args) => commands::cmd_symmetrize(args),
        Command::EvalBatch(args) => batch::cmd_eval_batch(args),
        Command::Sample(args) => commands::cmd_sample(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            std::process::exit(err.code);
        }
    }
}

mod args;
mod commands;

use clap::Parser;

use args::{Cli, CliError, Command};

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Clean(args) => commands::cmd_clean(args),
        Command::Theory(args) => commands::cmd_theory(args),
        Command::Eval(args) => commands::cmd_eval(args),
    }
}

fn main() {
    let cli = Cli::parse();

    // The worker pool is owned here; all parallelism lives below the library
    // module boundaries. Reductions are ordered either way, so the worker
    // count never changes results.
    let workers = match &cli.command {
        Command::Simulate(a) => a.common.workers,
        Command::Clean(a) => a.common.workers,
        Command::Theory(a) => a.common.workers,
        Command::Eval(a) => a.common.workers,
    };
    if let Some(workers) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot build worker pool: {e}");
            std::process::exit(2);
        }
    }

    if let Err(err) = run(cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}

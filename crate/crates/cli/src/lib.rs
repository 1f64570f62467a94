//! The `locpoly` command line, callable in-process through [`run`].

mod args;
mod commands;

use std::ffi::OsString;

use clap::Parser;

pub use args::Cli;
pub use commands::{
    sidecar_path, Failure, EXIT_AGGREGATION, EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE, RATE_FILE,
    SVG_FILE,
};

use args::Command;

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("LOCPOLY_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::usage(format!(
            "LOCPOLY_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Runs one command line and returns the process exit code. Reports go to
/// stdout or files, diagnostics to stderr.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Robust(a) => commands::robust(a),
        Command::Convergence(a) => commands::convergence(a),
        Command::Generate(a) => commands::generate(a),
    });
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}: {}", f.name, f.message);
            f.code
        }
    }
}

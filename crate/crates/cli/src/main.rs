use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(locpoly_cli::run(std::env::args_os()))
}

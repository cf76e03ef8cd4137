use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(billiard_lab::cli::main_with_args(std::env::args_os()))
}

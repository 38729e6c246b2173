use std::process::ExitCode;

fn main() -> ExitCode {
    wforge_core::cli::main_with_args(std::env::args_os())
}

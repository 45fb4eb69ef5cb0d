use std::process::ExitCode;

fn main() -> ExitCode {
    nrvq::cli::main_with_args(std::env::args_os())
}

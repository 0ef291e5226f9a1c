use std::process::ExitCode;

fn main() -> ExitCode {
    recstream::cli::run(std::env::args_os())
}

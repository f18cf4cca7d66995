use std::process::ExitCode;

fn main() -> ExitCode {
    svtk::cli::main_with_args(std::env::args_os())
}

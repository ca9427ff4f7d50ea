use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bssvol::cli::main_with(std::env::args_os()))
}

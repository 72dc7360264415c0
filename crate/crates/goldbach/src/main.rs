use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(goldbach::cli::run(std::env::args_os()) as u8)
}

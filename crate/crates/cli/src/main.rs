use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rcms_cli::run(std::env::args_os()))
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dissipative_cli::run(std::env::args_os()))
}

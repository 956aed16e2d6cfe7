use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qutrit_ybe_cli::run(std::env::args_os()))
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(usrecon::run(std::env::args_os()))
}

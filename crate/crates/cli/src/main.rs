use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(opclass_cli::run(std::env::args_os()) as u8)
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(rnv_cli::run(std::env::args_os()) as u8)
}

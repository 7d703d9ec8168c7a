use std::process::ExitCode;

fn main() -> ExitCode {
    let code = henle_cli::run_command(std::env::args_os());
    ExitCode::from(code.clamp(0, 255) as u8)
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(omq_tools::cli::run() as u8)
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(hamswitch::cli::dispatch() as u8)
}

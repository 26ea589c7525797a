use std::process::ExitCode;

fn main() -> ExitCode {
    aqia::cli::run()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    chebycar::cli::main()
}

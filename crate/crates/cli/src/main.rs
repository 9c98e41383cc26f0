use std::process::ExitCode;

fn main() -> ExitCode {
    strukt_cli::run(std::env::args_os())
}

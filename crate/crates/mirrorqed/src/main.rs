use std::process::ExitCode;

fn main() -> ExitCode {
    mirrorqed::cli::main_with(std::env::args_os())
}

fn main() -> std::process::ExitCode {
    sdfuzz_cli::main_with_args(std::env::args_os())
}

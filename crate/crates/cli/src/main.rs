fn main() -> std::process::ExitCode {
    paraopt_cli::run(std::env::args_os())
}

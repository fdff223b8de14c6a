fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(kyle_sim::cli::run(std::env::args_os()))
}

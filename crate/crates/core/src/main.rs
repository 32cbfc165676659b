fn main() {
    std::process::exit(eegerr::cli::run_command(std::env::args_os()));
}

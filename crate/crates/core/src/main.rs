fn main() {
    std::process::exit(aecomm::cli::run_command(std::env::args_os()));
}

fn main() {
    std::process::exit(macdiv::cli::parse_and_run(std::env::args_os()));
}

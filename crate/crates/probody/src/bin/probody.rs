fn main() {
    std::process::exit(probody::harness::cli::run_cli(std::env::args_os()));
}

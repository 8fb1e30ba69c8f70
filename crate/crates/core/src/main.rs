fn main() {
    std::process::exit(ncr_sim::cli::run_cli(std::env::args_os()));
}

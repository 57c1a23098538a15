fn main() {
    std::process::exit(bivp_core::cli::run(std::env::args_os()));
}

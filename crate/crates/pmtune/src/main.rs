fn main() {
    std::process::exit(pmtune::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(cmalab::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(loglab::cli::main_with_args(std::env::args_os()));
}

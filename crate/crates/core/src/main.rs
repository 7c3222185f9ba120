fn main() {
    std::process::exit(bbl::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(pseudochem::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(facloc::cli::main_with_args(std::env::args_os()));
}

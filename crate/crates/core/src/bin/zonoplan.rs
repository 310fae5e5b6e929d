fn main() {
    std::process::exit(zonoplan::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(borgspec::cli::main_from_args(std::env::args_os()));
}

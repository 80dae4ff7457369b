fn main() {
    std::process::exit(dynprog::cli::main_with_args(std::env::args_os()));
}

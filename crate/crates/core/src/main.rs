fn main() {
    std::process::exit(abpce::cli::main_with_args(std::env::args_os()));
}

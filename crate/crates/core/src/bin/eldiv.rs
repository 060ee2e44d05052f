fn main() {
    std::process::exit(eldiv::cli::main_with_args(std::env::args_os()));
}

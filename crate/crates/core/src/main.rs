fn main() {
    std::process::exit(polaritron::cli::main_with_args(std::env::args_os()));
}

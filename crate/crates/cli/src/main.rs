fn main() {
    std::process::exit(darkpump_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(lumisec::cli::main_with_args(std::env::args_os()));
}

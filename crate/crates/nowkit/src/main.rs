fn main() {
    std::process::exit(nowkit::cli::main_with_args(std::env::args_os()));
}

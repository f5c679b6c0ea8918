fn main() {
    std::process::exit(sentinel::cli::main_with(std::env::args_os()));
}

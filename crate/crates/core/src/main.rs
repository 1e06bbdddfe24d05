fn main() {
    std::process::exit(lamperti::cli::main_with_args(std::env::args_os()));
}

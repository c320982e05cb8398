fn main() {
    std::process::exit(lel::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(socialpose_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(flaretk_cli::run(std::env::args_os()));
}

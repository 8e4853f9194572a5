fn main() {
    std::process::exit(evfuse_cli::cli::run(std::env::args_os()));
}

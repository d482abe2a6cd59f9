fn main() {
    std::process::exit(qtail::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(movsum::cli::run(std::env::args_os()));
}

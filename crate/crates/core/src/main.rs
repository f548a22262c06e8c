fn main() {
    std::process::exit(levyfluct::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(extail::cli::run(std::env::args_os()));
}

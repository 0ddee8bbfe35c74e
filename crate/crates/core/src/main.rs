fn main() {
    std::process::exit(accentkit::cli::run(std::env::args_os()));
}

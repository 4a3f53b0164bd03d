fn main() {
    std::process::exit(dualmark::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(meanfield::cli::run(std::env::args_os()));
}

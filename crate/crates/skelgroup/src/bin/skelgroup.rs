fn main() {
    std::process::exit(skelgroup::cli::run_from(std::env::args_os()));
}

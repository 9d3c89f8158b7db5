fn main() {
    std::process::exit(causaldet::cli::run(std::env::args_os()));
}

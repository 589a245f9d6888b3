fn main() {
    std::process::exit(hypershift::cli::run(std::env::args_os()));
}

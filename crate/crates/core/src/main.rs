fn main() {
    std::process::exit(knotpot::cli::run(std::env::args_os()));
}

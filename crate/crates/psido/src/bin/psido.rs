fn main() {
    std::process::exit(psido::cli::run());
}

fn main() {
    std::process::exit(pairfair::cli::run());
}

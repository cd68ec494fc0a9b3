fn main() {
    std::process::exit(adra::cli::run());
}

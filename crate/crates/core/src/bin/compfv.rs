fn main() {
    std::process::exit(compfv::cli::run());
}

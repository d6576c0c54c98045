fn main() {
    std::process::exit(semichaos::cli::run());
}

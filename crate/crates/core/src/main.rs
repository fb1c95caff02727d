fn main() {
    std::process::exit(accelerant::cli::run());
}

fn main() {
    std::process::exit(equiflex::cli::main());
}

fn main() {
    std::process::exit(maxent_triples::cli::main());
}

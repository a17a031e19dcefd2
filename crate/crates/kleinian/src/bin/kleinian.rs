fn main() {
    std::process::exit(kleinian::cli::main());
}

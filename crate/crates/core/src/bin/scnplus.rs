fn main() {
    std::process::exit(scnplus::cli::main());
}

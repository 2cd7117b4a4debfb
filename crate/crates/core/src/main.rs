fn main() {
    std::process::exit(acdrl::cli::main());
}

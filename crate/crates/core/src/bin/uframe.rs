fn main() {
    std::process::exit(uframe::cli::main());
}

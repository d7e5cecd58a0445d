fn main() {
    std::process::exit(fastds::cli::main());
}

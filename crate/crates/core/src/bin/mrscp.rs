fn main() {
    std::process::exit(mrscp::cli::main_with(std::env::args()));
}

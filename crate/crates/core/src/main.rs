fn main() {
    let code = levytree::cli::run(std::env::args());
    std::process::exit(code);
}

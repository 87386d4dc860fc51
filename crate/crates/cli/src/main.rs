fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(absorbing_walks_cli::run(&argv));
}

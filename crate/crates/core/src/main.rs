fn main() { std::process::exit(sbnet::cli::run(std::env::args().collect())) }

fn main() { std::process::exit(hcsk::cli::run(std::env::args().collect())); }

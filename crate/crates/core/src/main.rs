fn main() {
    std::process::exit(skgen::cli::run(std::env::args_os()));
}

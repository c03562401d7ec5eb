fn main() {
    std::process::exit(popdiff::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(wordaxes::cli::run(std::env::args_os()));
}

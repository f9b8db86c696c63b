fn main() {
    std::process::exit(ilrma::cli::run(std::env::args_os()));
}

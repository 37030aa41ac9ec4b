fn main() {
    std::process::exit(ilwc::cli::run(std::env::args_os()));
}

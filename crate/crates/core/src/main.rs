fn main() {
    std::process::exit(lpx::cli::run(std::env::args_os()));
}

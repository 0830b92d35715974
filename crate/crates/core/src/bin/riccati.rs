fn main() {
    std::process::exit(riccati_core::cli::run(std::env::args_os()));
}

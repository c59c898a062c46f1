fn main() {
    std::process::exit(mccm::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(flatkb::cli::run(std::env::args_os()));
}

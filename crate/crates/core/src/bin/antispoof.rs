fn main() {
    std::process::exit(antispoof::cli::run(std::env::args_os()));
}

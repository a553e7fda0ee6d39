fn main() {
    std::process::exit(eeqt_cli::run(std::env::args_os()));
}

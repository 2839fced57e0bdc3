fn main() {
    std::process::exit(pjn_cli::run_from(std::env::args_os()));
}

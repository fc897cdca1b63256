fn main() {
    std::process::exit(thinfilm::cli::run_cli(std::env::args_os()));
}

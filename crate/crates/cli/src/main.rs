fn main() {
    std::process::exit(disteval_cli::run_cli(std::env::args_os()));
}

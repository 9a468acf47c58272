fn main() {
    std::process::exit(volscreen_cli::run_cli(std::env::args_os()));
}

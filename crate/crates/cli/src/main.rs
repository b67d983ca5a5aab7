fn main() {
    std::process::exit(twofluid_cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(flatflow::run_cli(std::env::args_os()));
}

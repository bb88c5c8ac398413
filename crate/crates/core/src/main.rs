fn main() {
    std::process::exit(deep_splitting::harness::cli_main(std::env::args_os()));
}

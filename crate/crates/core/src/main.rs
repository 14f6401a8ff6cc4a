fn main() {
    std::process::exit(advtest::harness::cli_main(std::env::args_os()));
}

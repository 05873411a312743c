fn main() {
    std::process::exit(rfi_harness::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(wsan_recover::cli::main_with_args(std::env::args_os()));
}

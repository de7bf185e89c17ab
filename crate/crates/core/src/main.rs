fn main() {
    std::process::exit(syncq::cli::main_with_args(std::env::args_os()));
}

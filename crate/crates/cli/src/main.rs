fn main() {
    std::process::exit(fracdecay::cli::main_with_args(std::env::args_os()));
}

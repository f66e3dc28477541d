fn main() {
    std::process::exit(pt_oscillator::cli::main_with_args(std::env::args_os()));
}

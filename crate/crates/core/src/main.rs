fn main() {
    std::process::exit(poincare_lab::cli::main_with_args(std::env::args_os()));
}

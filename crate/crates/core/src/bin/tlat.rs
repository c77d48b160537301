fn main() {
    std::process::exit(toeplitz_lattice::cli::main_with_args(std::env::args_os()));
}

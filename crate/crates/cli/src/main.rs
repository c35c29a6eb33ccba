fn main() {
    std::process::exit(bwres_cli::main_with_args(std::env::args_os()));
}

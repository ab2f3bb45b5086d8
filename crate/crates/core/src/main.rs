fn main() {
    std::process::exit(wallscale::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(fado_cli::main_with(std::env::args_os()));
}

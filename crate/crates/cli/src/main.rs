fn main() {
    std::process::exit(ctws_cli::main_with_args(std::env::args_os()));
}

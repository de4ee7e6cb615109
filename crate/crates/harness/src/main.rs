fn main() {
    std::process::exit(aixi_lab::cli::main_with_args(std::env::args_os()));
}

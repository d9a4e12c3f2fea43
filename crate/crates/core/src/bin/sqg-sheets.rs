fn main() {
    std::process::exit(sqg_sheets::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(kml_core::cli::main_with_args(std::env::args_os()));
}

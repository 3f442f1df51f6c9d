fn main() {
    std::process::exit(localdeg::cli::cli_dispatch(std::env::args_os()));
}

fn main() {
    std::process::exit(qsts::cli::cli_dispatch(std::env::args_os()));
}

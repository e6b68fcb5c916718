fn main() {
    std::process::exit(gwdiag::cli::run_from(std::env::args_os()));
}

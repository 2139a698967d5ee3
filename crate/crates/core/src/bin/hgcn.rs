fn main() {
    std::process::exit(hgcn::cli::run_cli(std::env::args_os()));
}

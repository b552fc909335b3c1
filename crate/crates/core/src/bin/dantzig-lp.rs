fn main() {
    std::process::exit(dantzig_lp::cli::cli_main(std::env::args_os()));
}

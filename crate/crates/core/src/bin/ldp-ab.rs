fn main() {
    std::process::exit(ldp_abtest::cli::parse_and_dispatch(std::env::args_os()));
}

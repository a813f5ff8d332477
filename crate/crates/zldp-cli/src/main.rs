fn main() {
    std::process::exit(zldp_cli::run(std::env::args_os()));
}

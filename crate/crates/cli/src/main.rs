fn main() {
    std::process::exit(relhyp_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(ehmm_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(tailcausal::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(cltlab::cli::run(std::env::args_os()));
}

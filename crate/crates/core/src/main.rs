fn main() {
    std::process::exit(fklab::cli::run(std::env::args_os()));
}

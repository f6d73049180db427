fn main() {
    std::process::exit(toricstack::cli::run(std::env::args_os()));
}

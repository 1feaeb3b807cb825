fn main() {
    std::process::exit(h2h::cli::run(std::env::args_os()));
}

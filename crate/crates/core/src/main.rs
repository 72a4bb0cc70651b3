fn main() {
    std::process::exit(multippi::cli::run(std::env::args_os()));
}

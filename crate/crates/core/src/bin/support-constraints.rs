fn main() {
    std::process::exit(support_constraints::cli::run(std::env::args_os()));
}

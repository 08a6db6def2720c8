fn main() {
    std::process::exit(kscert::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(convord_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(leafcut::cli::run(std::env::args_os()));
}

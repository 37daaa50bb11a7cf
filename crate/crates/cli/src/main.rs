fn main() {
    std::process::exit(nestlab_cli::run(std::env::args_os()));
}

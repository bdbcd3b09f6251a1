fn main() {
    std::process::exit(narrative_cli::run(std::env::args_os()));
}

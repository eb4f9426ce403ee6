fn main() {
    std::process::exit(timebound::cli::run(std::env::args_os()));
}

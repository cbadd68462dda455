fn main() {
    std::process::exit(meanspec::cli::run(std::env::args_os()));
}

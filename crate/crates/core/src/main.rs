fn main() {
    std::process::exit(weaknull::cli::run(std::env::args_os()));
}

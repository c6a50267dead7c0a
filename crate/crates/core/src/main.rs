fn main() {
    std::process::exit(t2ieval::cli::run(std::env::args_os()));
}

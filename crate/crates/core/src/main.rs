fn main() {
    std::process::exit(rockcluster::cli::run(std::env::args_os()));
}

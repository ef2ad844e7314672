fn main() {
    std::process::exit(geoforest::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(ggflex::cli::dispatch(std::env::args()));
}

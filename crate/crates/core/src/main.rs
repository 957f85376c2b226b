fn main() {
    std::process::exit(topo_uncertainty::cli::run(std::env::args_os()));
}

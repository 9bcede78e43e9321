fn main() {
    std::process::exit(lowrank_gp::harness::cli::run(std::env::args_os()));
}

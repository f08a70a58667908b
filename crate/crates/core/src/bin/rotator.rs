fn main() {
    std::process::exit(rotator_dynamics::cli::run(std::env::args_os()));
}

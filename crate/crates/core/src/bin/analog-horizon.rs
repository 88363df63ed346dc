fn main() {
    std::process::exit(analog_horizon::cli::run(std::env::args_os()));
}

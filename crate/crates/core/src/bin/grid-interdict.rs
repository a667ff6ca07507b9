fn main() {
    grid_interdict::cli::init_logging();
    std::process::exit(grid_interdict::cli::run(std::env::args_os()));
}

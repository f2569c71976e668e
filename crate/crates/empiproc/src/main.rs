fn main() {
    std::process::exit(empiproc::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(moebius_lab::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(nsp_lab::cli::run(std::env::args_os()));
}

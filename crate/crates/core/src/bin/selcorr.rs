fn main() {
    std::process::exit(selcorr::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(weylsec::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(frachardy_cli::run(std::env::args_os()));
}

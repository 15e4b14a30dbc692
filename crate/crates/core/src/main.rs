fn main() {
    std::process::exit(pecfdtd::cli::cli_main(std::env::args_os()));
}

fn main() {
    std::process::exit(classe_forge::cli::run(std::env::args_os()));
}

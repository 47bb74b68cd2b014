fn main() {
    std::process::exit(yaoyao::cli::run(std::env::args_os()));
}

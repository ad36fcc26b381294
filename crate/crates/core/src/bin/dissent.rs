fn main() {
    std::process::exit(dissent::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(symctl::cli::main_from_env());
}

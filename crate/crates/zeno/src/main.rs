fn main() {
    std::process::exit(zeno::cli::run(std::env::args_os()));
}

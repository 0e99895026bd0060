fn main() {
    std::process::exit(qtrace::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(logmorph::run(std::env::args_os()));
}

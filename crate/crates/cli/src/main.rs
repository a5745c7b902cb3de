fn main() {
    std::process::exit(tilekit::run(std::env::args_os()));
}

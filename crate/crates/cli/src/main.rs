fn main() {
    std::process::exit(conclab::run(std::env::args_os()));
}

fn main() {
    std::process::exit(neuroskin::cli::run(std::env::args_os()));
}

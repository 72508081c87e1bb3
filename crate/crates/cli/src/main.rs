fn main() {
    std::process::exit(dotedge_cli::run(std::env::args_os()));
}

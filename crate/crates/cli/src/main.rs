fn main() {
    env_logger::init();
    std::process::exit(echotext_cli::run(std::env::args_os()));
}

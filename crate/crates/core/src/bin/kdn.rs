fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KDN_LOG", "error")).init();
    std::process::exit(kdn::cli::run(std::env::args_os()));
}
